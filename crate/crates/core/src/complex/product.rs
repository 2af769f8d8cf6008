//! Cells of a product of rooted trees, addressed arithmetically.
//!
//! A cell is a tuple with one entry per factor: a node or an edge of that tree.
//! Cells are grouped by which factors contribute an edge (the mask); masks are
//! ordered by popcount, so ids increase with dimension, and within a mask cells
//! are ordered lexicographically by their per-factor indices.

use super::factor::Factor;
use super::CellId;
use crate::numeric::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorCell {
    Node(u32),
    /// The edge from the parent of this node to the node.
    Edge(u32),
}

impl FactorCell {
    fn digit(self) -> u32 {
        match self {
            FactorCell::Node(u) => u,
            FactorCell::Edge(c) => c - 1,
        }
    }

    pub fn is_edge(self) -> bool {
        matches!(self, FactorCell::Edge(_))
    }
}

#[derive(Clone, Debug)]
struct Block {
    mask: u32,
    offset: u64,
    count: u64,
    strides: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ProductRepr {
    factors: Vec<Factor>,
    blocks: Vec<Block>,
    block_of_mask: Vec<usize>,
    total: u64,
    volumes: Vec<Q>,
}

impl ProductRepr {
    /// Total cell count, computed before anything is allocated.
    pub fn count_cells(factors: &[(u64, u64)]) -> u64 {
        let n = factors.len();
        (0u32..1 << n)
            .map(|mask| {
                (0..n)
                    .map(|j| {
                        if mask >> j & 1 == 1 {
                            factors[j].1
                        } else {
                            factors[j].0
                        }
                    })
                    .fold(1u64, |a, b| a.saturating_mul(b))
            })
            .fold(0u64, |a, b| a.saturating_add(b))
    }

    pub fn new(factors: Vec<Factor>, edge_length: Q) -> Self {
        let n = factors.len();
        let mut masks: Vec<u32> = (0..1u32 << n).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let mut blocks = Vec::with_capacity(masks.len());
        let mut block_of_mask = vec![0; masks.len()];
        let mut offset = 0u64;
        for mask in masks {
            let sizes: Vec<u64> = (0..n)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        factors[j].num_edges() as u64
                    } else {
                        factors[j].num_nodes() as u64
                    }
                })
                .collect();
            let mut strides = vec![1u64; n];
            for j in (0..n.saturating_sub(1)).rev() {
                strides[j] = strides[j + 1] * sizes[j + 1];
            }
            let count = sizes.iter().product();
            block_of_mask[mask as usize] = blocks.len();
            blocks.push(Block {
                mask,
                offset,
                count,
                strides,
            });
            offset += count;
        }
        let volumes = (0..=n)
            .map(|d| crate::numeric::q_pow(&edge_length, d as u32))
            .collect();
        ProductRepr {
            factors,
            blocks,
            block_of_mask,
            total: offset,
            volumes,
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn volume_of_dim(&self, d: usize) -> &Q {
        &self.volumes[d]
    }

    pub fn edge_length(&self) -> &Q {
        &self.volumes[1.min(self.volumes.len() - 1)]
    }

    /// Id range of the cells of dimension `d`.
    pub fn dim_range(&self, d: usize) -> std::ops::Range<u32> {
        let mut lo = None;
        let mut hi = 0u64;
        for b in &self.blocks {
            if b.mask.count_ones() as usize == d {
                lo.get_or_insert(b.offset);
                hi = b.offset + b.count;
            }
        }
        match lo {
            Some(lo) => lo as u32..hi as u32,
            None => 0..0,
        }
    }

    fn block_of(&self, id: CellId) -> &Block {
        let id = id.0 as u64;
        let i = self.blocks.partition_point(|b| b.offset + b.count <= id);
        &self.blocks[i]
    }

    pub fn dim(&self, id: CellId) -> usize {
        self.block_of(id).mask.count_ones() as usize
    }

    pub fn decode(&self, id: CellId) -> Vec<FactorCell> {
        let b = self.block_of(id);
        let mut local = id.0 as u64 - b.offset;
        let n = self.factors.len();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let digit = (local / b.strides[j]) as u32;
            local %= b.strides[j];
            out.push(if b.mask >> j & 1 == 1 {
                FactorCell::Edge(digit + 1)
            } else {
                FactorCell::Node(digit)
            });
        }
        out
    }

    pub fn encode(&self, cells: &[FactorCell]) -> CellId {
        let mask = cells
            .iter()
            .enumerate()
            .fold(0u32, |m, (j, c)| if c.is_edge() { m | 1 << j } else { m });
        let b = &self.blocks[self.block_of_mask[mask as usize]];
        let local: u64 = cells
            .iter()
            .zip(&b.strides)
            .map(|(c, s)| c.digit() as u64 * s)
            .sum();
        CellId((b.offset + local) as u32)
    }

    pub fn vertex(&self, nodes: &[u32]) -> CellId {
        let cells: Vec<FactorCell> = nodes.iter().map(|&u| FactorCell::Node(u)).collect();
        self.encode(&cells)
    }

    pub fn vertex_nodes(&self, v: CellId) -> Vec<u32> {
        self.decode(v)
            .into_iter()
            .map(|c| match c {
                FactorCell::Node(u) => u,
                FactorCell::Edge(_) => panic!("cell {v} is not a vertex"),
            })
            .collect()
    }

    pub fn boundary(&self, id: CellId) -> Vec<(CellId, i8)> {
        let mut cells = self.decode(id);
        let mut out = Vec::new();
        let mut edges_before = 0;
        for j in 0..cells.len() {
            if let FactorCell::Edge(c) = cells[j] {
                let sign: i8 = if edges_before % 2 == 0 { 1 } else { -1 };
                let parent = self.factors[j].parent(c).expect("edge has a parent");
                cells[j] = FactorCell::Node(c);
                out.push((self.encode(&cells), sign));
                cells[j] = FactorCell::Node(parent);
                out.push((self.encode(&cells), -sign));
                cells[j] = FactorCell::Edge(c);
                edges_before += 1;
            }
        }
        out
    }

    pub fn coboundary(&self, id: CellId) -> Vec<(CellId, i8)> {
        let mut cells = self.decode(id);
        let mut out = Vec::new();
        let mut edges_before = 0;
        for j in 0..cells.len() {
            match cells[j] {
                FactorCell::Edge(_) => edges_before += 1,
                FactorCell::Node(u) => {
                    let sign: i8 = if edges_before % 2 == 0 { 1 } else { -1 };
                    if self.factors[j].parent(u).is_some() {
                        cells[j] = FactorCell::Edge(u);
                        out.push((self.encode(&cells), sign));
                    }
                    for &c in self.factors[j].children(u) {
                        cells[j] = FactorCell::Edge(c);
                        out.push((self.encode(&cells), -sign));
                    }
                    cells[j] = FactorCell::Node(u);
                }
            }
        }
        out
    }

    /// Vertices of a cell indexed by bitmask over its edge factors (ascending factor
    /// order): bit `i` set selects the child end of the `i`-th edge.
    pub fn cube_vertices(&self, id: CellId) -> Vec<CellId> {
        let cells = self.decode(id);
        let edge_slots: Vec<usize> = (0..cells.len()).filter(|&j| cells[j].is_edge()).collect();
        let k = edge_slots.len();
        let mut out = Vec::with_capacity(1 << k);
        let mut nodes: Vec<u32> = cells
            .iter()
            .enumerate()
            .map(|(j, c)| match *c {
                FactorCell::Node(u) => u,
                FactorCell::Edge(c) => self.factors[j].parent(c).unwrap(),
            })
            .collect();
        for bits in 0u32..1 << k {
            for (i, &j) in edge_slots.iter().enumerate() {
                if let FactorCell::Edge(c) = cells[j] {
                    nodes[j] = if bits >> i & 1 == 1 {
                        c
                    } else {
                        self.factors[j].parent(c).unwrap()
                    };
                }
            }
            out.push(self.vertex(&nodes));
        }
        out
    }

    /// Edges at a vertex: one per factor neighbour, with the neighbouring vertex.
    pub fn vertex_edges(&self, v: CellId) -> Vec<(CellId, CellId)> {
        let nodes = self.vertex_nodes(v);
        let mut out = Vec::new();
        let mut cells: Vec<FactorCell> = nodes.iter().map(|&u| FactorCell::Node(u)).collect();
        let mut other = nodes.clone();
        for j in 0..nodes.len() {
            let u = nodes[j];
            for w in self.factors[j].neighbors(u) {
                let child = if self.factors[j].parent(w) == Some(u) { w } else { u };
                cells[j] = FactorCell::Edge(child);
                other[j] = w;
                out.push((self.encode(&cells), self.vertex(&other)));
            }
            cells[j] = FactorCell::Node(u);
            other[j] = u;
        }
        out
    }

    /// 1-skeleton distance between vertices, in edges.
    pub fn hop_dist(&self, u: CellId, v: CellId) -> u64 {
        let a = self.vertex_nodes(u);
        let b = self.vertex_nodes(v);
        (0..a.len())
            .map(|j| self.factors[j].dist(a[j], b[j]) as u64)
            .sum()
    }

    /// Squared model distance between vertices, in edge-length units.
    pub fn dist_sq_units(&self, u: CellId, v: CellId) -> u64 {
        let a = self.vertex_nodes(u);
        let b = self.vertex_nodes(v);
        (0..a.len())
            .map(|j| {
                let d = self.factors[j].dist(a[j], b[j]) as u64;
                d * d
            })
            .sum()
    }

    /// Vertices whose squared model distance to `v` is at most `max_units`
    /// (in squared edge lengths), with that distance.
    pub fn ball_vertices(&self, v: CellId, max_units: u64) -> Vec<(CellId, u64)> {
        let centre = self.vertex_nodes(v);
        let r = (max_units as f64).sqrt().floor() as u32 + 1;
        let balls: Vec<Vec<(u32, u32)>> = self
            .factors
            .iter()
            .zip(&centre)
            .map(|(f, &u)| f.ball(u, r))
            .collect();
        let mut out = Vec::new();
        let mut nodes = vec![0u32; balls.len()];
        self.ball_rec(&balls, 0, 0, max_units, &mut nodes, &mut out);
        out
    }

    fn ball_rec(
        &self,
        balls: &[Vec<(u32, u32)>],
        j: usize,
        acc: u64,
        max_units: u64,
        nodes: &mut Vec<u32>,
        out: &mut Vec<(CellId, u64)>,
    ) {
        if j == balls.len() {
            out.push((self.vertex(nodes), acc));
            return;
        }
        for &(u, d) in &balls[j] {
            let next = acc + (d as u64) * (d as u64);
            if next <= max_units {
                nodes[j] = u;
                self.ball_rec(balls, j + 1, next, max_units, nodes, out);
            }
        }
    }
}
