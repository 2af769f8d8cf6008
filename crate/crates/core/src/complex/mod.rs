//! Cube complexes with a model metric: grids, products of trees and custom complexes.

mod explicit;
pub mod factor;
pub mod product;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub use explicit::ExplicitRepr;
pub use factor::{Factor, TreePoint};
pub use product::{FactorCell, ProductRepr};

use crate::chains::Chain;
use crate::error::{Error, Result};
use crate::numeric::{qi, sqrt_f64, to_f64, Q};

/// Identifier of a cell; vertices are the cells of dimension 0.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type CellSet = BTreeSet<CellId>;

/// Default limit on the number of cells a builder may create.
pub const DEFAULT_CELL_BUDGET: u64 = 60_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    Grid { n: usize, extent: usize, h: Q },
    TreeProduct { branch_a: usize, branch_b: usize, depth: usize },
    CustomCube,
}

#[derive(Clone, Debug)]
enum Repr {
    Product(ProductRepr),
    Explicit(ExplicitRepr),
}

/// A point given by a cell and local coordinates in [0,1] along each edge direction
/// of the cell (ascending factor order for product complexes).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    pub cell: CellId,
    pub coords: Vec<Q>,
}

impl Point {
    pub fn vertex(v: CellId) -> Self {
        Point {
            cell: v,
            coords: Vec::new(),
        }
    }
}

/// Model distance between two points. `exact_sq` is present when the squared
/// distance is known exactly; otherwise only the bracket is meaningful.
#[derive(Clone, Debug)]
pub struct Distance {
    pub lower: f64,
    pub upper: f64,
    pub exact_sq: Option<Q>,
}

impl Distance {
    pub fn value(&self) -> f64 {
        match &self.exact_sq {
            Some(q) => sqrt_f64(q),
            None => self.upper,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MetricComplex {
    kind: MetricKind,
    repr: Repr,
    kappa_sq: Q,
    max_cell_path_diam: Q,
}

impl MetricComplex {
    pub fn build_grid(n: usize, extent: usize, h: Q) -> Result<Self> {
        Self::build_grid_with_budget(n, extent, h, DEFAULT_CELL_BUDGET)
    }

    pub fn build_grid_with_budget(n: usize, extent: usize, h: Q, budget: u64) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(Error::invalid(format!("grid dimension must be 2..4, got {n}")));
        }
        if extent == 0 {
            return Err(Error::invalid("grid extent must be at least 1"));
        }
        if !h.is_positive() {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        let sizes = vec![(extent as u64 + 1, extent as u64); n];
        let total = ProductRepr::count_cells(&sizes);
        check_budget(total, budget)?;
        let factors = (0..n).map(|_| Factor::path(extent)).collect();
        let repr = ProductRepr::new(factors, h.clone());
        Ok(MetricComplex {
            max_cell_path_diam: qi(n as i64) * &h,
            kind: MetricKind::Grid { n, extent, h },
            repr: Repr::Product(repr),
            kappa_sq: qi(n as i64),
        })
    }

    pub fn build_tree_product(branch_a: usize, branch_b: usize, depth: usize) -> Result<Self> {
        Self::build_tree_product_with_budget(branch_a, branch_b, depth, DEFAULT_CELL_BUDGET)
    }

    pub fn build_tree_product_with_budget(
        branch_a: usize,
        branch_b: usize,
        depth: usize,
        budget: u64,
    ) -> Result<Self> {
        if branch_a < 2 || branch_b < 2 {
            return Err(Error::invalid("tree branch degrees must be at least 2"));
        }
        let va = Factor::node_count_regular(branch_a, depth);
        let vb = Factor::node_count_regular(branch_b, depth);
        let total = ProductRepr::count_cells(&[(va, va - 1), (vb, vb - 1)]);
        check_budget(total, budget)?;
        let factors = vec![
            Factor::regular_tree(branch_a, depth),
            Factor::regular_tree(branch_b, depth),
        ];
        Ok(MetricComplex {
            kind: MetricKind::TreeProduct {
                branch_a,
                branch_b,
                depth,
            },
            repr: Repr::Product(ProductRepr::new(factors, Q::one())),
            kappa_sq: qi(2),
            max_cell_path_diam: qi(2),
        })
    }

    /// Loads a custom cube complex; see the README for the JSON layout.
    pub fn from_custom_json(text: &str) -> Result<Self> {
        let (repr, kappa) = ExplicitRepr::from_json(text)?;
        let mut max_diam = Q::zero();
        for d in 1..=repr.max_dim() {
            for &c in repr.cells_of_dim(d) {
                let mut edges = BTreeSet::new();
                collect_faces_of_dim(&repr, c, 1, &mut edges);
                let sum: Q = edges.iter().map(|e| repr.volume(*e).clone()).sum();
                if sum > max_diam {
                    max_diam = sum;
                }
            }
        }
        Ok(MetricComplex {
            kind: MetricKind::CustomCube,
            repr: Repr::Explicit(repr),
            kappa_sq: &kappa * &kappa,
            max_cell_path_diam: max_diam,
        })
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn product(&self) -> Option<&ProductRepr> {
        match &self.repr {
            Repr::Product(p) => Some(p),
            Repr::Explicit(_) => None,
        }
    }

    pub fn explicit(&self) -> Option<&ExplicitRepr> {
        match &self.repr {
            Repr::Explicit(e) => Some(e),
            Repr::Product(_) => None,
        }
    }

    /// Upper bound on the ratio of the 1-skeleton path metric to the model metric.
    pub fn kappa(&self) -> f64 {
        sqrt_f64(&self.kappa_sq)
    }

    pub fn kappa_sq(&self) -> &Q {
        &self.kappa_sq
    }

    /// Upper bound on the path-metric distance between two vertices of one cell.
    pub fn max_cell_path_diam(&self) -> &Q {
        &self.max_cell_path_diam
    }

    pub fn num_cells(&self) -> usize {
        match &self.repr {
            Repr::Product(p) => p.total() as usize,
            Repr::Explicit(e) => e.num_cells(),
        }
    }

    pub fn max_dim(&self) -> usize {
        match &self.repr {
            Repr::Product(p) => {
                let nonempty = p.factors().iter().filter(|f| f.num_edges() > 0).count();
                nonempty
            }
            Repr::Explicit(e) => e.max_dim(),
        }
    }

    pub fn dim(&self, c: CellId) -> usize {
        match &self.repr {
            Repr::Product(p) => p.dim(c),
            Repr::Explicit(e) => e.dim(c),
        }
    }

    pub fn contains(&self, c: CellId) -> bool {
        (c.0 as usize) < self.num_cells()
    }

    pub fn cells_of_dim(&self, d: usize) -> Box<dyn Iterator<Item = CellId> + '_> {
        match &self.repr {
            Repr::Product(p) => Box::new(p.dim_range(d).map(CellId)),
            Repr::Explicit(e) => Box::new(e.cells_of_dim(d).iter().copied()),
        }
    }

    pub fn count_of_dim(&self, d: usize) -> usize {
        match &self.repr {
            Repr::Product(p) => p.dim_range(d).len(),
            Repr::Explicit(e) => e.cells_of_dim(d).len(),
        }
    }

    pub fn volume(&self, c: CellId) -> &Q {
        match &self.repr {
            Repr::Product(p) => p.volume_of_dim(p.dim(c)),
            Repr::Explicit(e) => e.volume(c),
        }
    }

    /// Common volume of all cells of dimension `d`, when the complex is uniform.
    pub fn uniform_volume(&self, d: usize) -> Option<&Q> {
        match &self.repr {
            Repr::Product(p) => Some(p.volume_of_dim(d)),
            Repr::Explicit(_) => None,
        }
    }

    pub fn boundary(&self, c: CellId) -> Vec<(CellId, i8)> {
        match &self.repr {
            Repr::Product(p) => p.boundary(c),
            Repr::Explicit(e) => e.boundary(c).to_vec(),
        }
    }

    pub fn coboundary(&self, c: CellId) -> Vec<(CellId, i8)> {
        match &self.repr {
            Repr::Product(p) => p.coboundary(c),
            Repr::Explicit(e) => e.coboundary(c).to_vec(),
        }
    }

    /// Vertices of a cell. For product complexes they are listed by bitmask over
    /// the edge directions of the cell (bit set = child end).
    pub fn vertices(&self, c: CellId) -> Vec<CellId> {
        match &self.repr {
            Repr::Product(p) => p.cube_vertices(c),
            Repr::Explicit(e) => e.vertices(c).to_vec(),
        }
    }

    /// All faces of the given cells, including the cells themselves.
    pub fn closure<'a>(&self, cells: impl IntoIterator<Item = &'a CellId>) -> CellSet {
        let mut out = CellSet::new();
        let mut stack: Vec<CellId> = cells.into_iter().copied().collect();
        while let Some(c) = stack.pop() {
            if out.insert(c) {
                stack.extend(self.boundary(c).into_iter().map(|(f, _)| f));
            }
        }
        out
    }

    fn vertex_check(&self, v: CellId) -> Result<()> {
        if !self.contains(v) || self.dim(v) != 0 {
            return Err(Error::invalid(format!("cell {v} is not a vertex")));
        }
        Ok(())
    }

    /// Edges at a vertex together with the opposite endpoint.
    pub fn vertex_edges(&self, v: CellId) -> Vec<(CellId, CellId)> {
        match &self.repr {
            Repr::Product(p) => p.vertex_edges(v),
            Repr::Explicit(e) => e
                .coboundary(v)
                .iter()
                .map(|&(edge, _)| {
                    let (a, b) = e.edge_ends(edge);
                    (edge, if a == v { b } else { a })
                })
                .collect(),
        }
    }

    /// Exact squared model distance between vertices (product complexes only).
    pub fn vertex_dist_sq(&self, u: CellId, v: CellId) -> Option<Q> {
        let p = self.product()?;
        let h = p.edge_length();
        Some(qi(p.dist_sq_units(u, v) as i64) * h * h)
    }

    /// Model distance between vertices as a float; for custom complexes the
    /// path-metric upper bound.
    pub fn vertex_dist(&self, u: CellId, v: CellId) -> f64 {
        match self.vertex_dist_sq(u, v) {
            Some(q) => sqrt_f64(&q),
            None => self.path_distance(u, v).map(|d| to_f64(&d)).unwrap_or(f64::INFINITY),
        }
    }

    /// Path-metric distance between vertices along the 1-skeleton.
    pub fn path_distance(&self, u: CellId, v: CellId) -> Result<Q> {
        self.vertex_check(u)?;
        self.vertex_check(v)?;
        match &self.repr {
            Repr::Product(p) => Ok(qi(p.hop_dist(u, v) as i64) * p.edge_length()),
            Repr::Explicit(_) => self
                .path_distances_from(&[v], None)
                .remove(&u)
                .ok_or(Error::Disconnected { from: u, to: v }),
        }
    }

    /// Path-metric distances from a vertex set to every vertex within `limit`.
    pub fn path_distances_from(&self, sources: &[CellId], limit: Option<&Q>) -> HashMap<CellId, Q> {
        match &self.repr {
            Repr::Product(p) => {
                let h = p.edge_length();
                let max_hops: Option<u64> = limit.map(|l| {
                    let x = l / h;
                    x.floor().to_integer().try_into().unwrap_or(0)
                });
                let mut hops: HashMap<CellId, u64> = HashMap::new();
                let mut queue = VecDeque::new();
                for &s in sources {
                    if hops.insert(s, 0).is_none() {
                        queue.push_back(s);
                    }
                }
                while let Some(u) = queue.pop_front() {
                    let d = hops[&u];
                    if max_hops.is_some_and(|m| d >= m) {
                        continue;
                    }
                    for (_, w) in p.vertex_edges(u) {
                        hops.entry(w).or_insert_with(|| {
                            queue.push_back(w);
                            d + 1
                        });
                    }
                }
                hops.into_iter()
                    .map(|(v, d)| (v, qi(d as i64) * h))
                    .collect()
            }
            Repr::Explicit(e) => {
                let mut dist: HashMap<CellId, Q> = HashMap::new();
                let mut heap = BinaryHeap::new();
                for &s in sources {
                    heap.push(Reverse((Q::zero(), s)));
                }
                while let Some(Reverse((d, u))) = heap.pop() {
                    if dist.contains_key(&u) {
                        continue;
                    }
                    if limit.is_some_and(|l| &d > l) {
                        continue;
                    }
                    for &(edge, _) in e.coboundary(u) {
                        let (a, b) = e.edge_ends(edge);
                        let w = if a == u { b } else { a };
                        if !dist.contains_key(&w) {
                            heap.push(Reverse((&d + e.volume(edge), w)));
                        }
                    }
                    dist.insert(u, d);
                }
                dist
            }
        }
    }

    fn tree_points(&self, p: &Point) -> Result<Vec<TreePoint>> {
        let prod = self.product().expect("product complex");
        if !self.contains(p.cell) {
            return Err(Error::invalid(format!("unknown cell {}", p.cell)));
        }
        let cells = prod.decode(p.cell);
        let k = cells.iter().filter(|c| c.is_edge()).count();
        if p.coords.len() != k {
            return Err(Error::invalid(format!(
                "point in cell {} needs {k} coordinates, got {}",
                p.cell,
                p.coords.len()
            )));
        }
        let mut coords = p.coords.iter();
        cells
            .iter()
            .enumerate()
            .map(|(j, c)| match *c {
                FactorCell::Node(u) => Ok(TreePoint::Node(u)),
                FactorCell::Edge(child) => {
                    let t = coords.next().unwrap();
                    if t.is_negative() || t > &Q::one() {
                        return Err(Error::invalid("point coordinates must lie in [0,1]"));
                    }
                    Ok(if t.is_zero() {
                        TreePoint::Node(prod.factors()[j].parent(child).unwrap())
                    } else if t.is_one() {
                        TreePoint::Node(child)
                    } else {
                        TreePoint::OnEdge(child, t.clone())
                    })
                }
            })
            .collect()
    }

    /// Model distance between two points. Exact (as a squared rational) for grids
    /// and tree products; for custom complexes a bracket from the path metric.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<Distance> {
        match &self.repr {
            Repr::Product(prod) => {
                let a = self.tree_points(p)?;
                let b = self.tree_points(q)?;
                let h = prod.edge_length();
                let mut sq = Q::zero();
                for (j, f) in prod.factors().iter().enumerate() {
                    let d = f.point_dist(&a[j], &b[j]) * h;
                    sq += &d * &d;
                }
                let v = sqrt_f64(&sq);
                Ok(Distance {
                    lower: v,
                    upper: v,
                    exact_sq: Some(sq),
                })
            }
            Repr::Explicit(e) => {
                let reach = |pt: &Point| -> Result<(Vec<CellId>, Q)> {
                    if !self.contains(pt.cell) {
                        return Err(Error::invalid(format!("unknown cell {}", pt.cell)));
                    }
                    if e.dim(pt.cell) == 0 {
                        return Ok((vec![pt.cell], Q::zero()));
                    }
                    let mut edges = BTreeSet::new();
                    collect_faces_of_dim(e, pt.cell, 1, &mut edges);
                    let ext: Q = edges.iter().map(|x| e.volume(*x).clone()).sum();
                    Ok((e.vertices(pt.cell).to_vec(), ext))
                };
                let (va, ea) = reach(p)?;
                let (vb, eb) = reach(q)?;
                let dist = self.path_distances_from(&va, None);
                let best = vb
                    .iter()
                    .filter_map(|v| dist.get(v))
                    .min()
                    .cloned()
                    .ok_or(Error::Disconnected {
                        from: va[0],
                        to: vb[0],
                    })?;
                let kappa = self.kappa();
                let upper = to_f64(&(&best + &ea + &eb));
                let lower = if p == q {
                    0.0
                } else {
                    (to_f64(&(&best - &ea - &eb)).max(0.0)) / kappa
                };
                let exact_sq = (p.cell == q.cell && p.coords == q.coords).then(Q::zero);
                Ok(Distance {
                    lower,
                    upper,
                    exact_sq,
                })
            }
        }
    }

    /// Shortest 1-skeleton path from `from` to `to` as a 1-chain with boundary
    /// `to - from`. Among shortest paths the lexicographically smallest sequence of
    /// edge ids is returned.
    pub fn geodesic_path(&self, from: CellId, to: CellId) -> Result<Chain> {
        self.vertex_check(from)?;
        self.vertex_check(to)?;
        let mut chain = Chain::zero(1);
        if from == to {
            return Ok(chain);
        }
        match &self.repr {
            Repr::Product(p) => {
                let target = p.vertex_nodes(to);
                let mut cur = p.vertex_nodes(from);
                let mut cells: Vec<FactorCell> = cur.iter().map(|&u| FactorCell::Node(u)).collect();
                while cur != target {
                    let mut best: Option<(CellId, usize, u32, i64)> = None;
                    for j in 0..cur.len() {
                        if cur[j] == target[j] {
                            continue;
                        }
                        let f = &p.factors()[j];
                        let next = f.step_toward(cur[j], target[j]);
                        let (child, sign) = if f.parent(next) == Some(cur[j]) {
                            (next, 1)
                        } else {
                            (cur[j], -1)
                        };
                        cells[j] = FactorCell::Edge(child);
                        let id = p.encode(&cells);
                        cells[j] = FactorCell::Node(cur[j]);
                        if best.is_none_or(|b| id < b.0) {
                            best = Some((id, j, next, sign));
                        }
                    }
                    let (id, j, next, sign) = best.unwrap();
                    chain.add_term(id, sign);
                    cur[j] = next;
                    cells[j] = FactorCell::Node(next);
                }
                Ok(chain)
            }
            Repr::Explicit(e) => {
                let dist = self.path_distances_from(&[to], None);
                if !dist.contains_key(&from) {
                    return Err(Error::Disconnected { from, to });
                }
                let mut cur = from;
                while cur != to {
                    let dc = &dist[&cur];
                    let mut best: Option<(CellId, CellId, i64)> = None;
                    for &(edge, _) in e.coboundary(cur) {
                        let (a, b) = e.edge_ends(edge);
                        let (w, sign) = if a == cur { (b, 1) } else { (a, -1) };
                        if dist.get(&w).is_some_and(|dw| &(dw + e.volume(edge)) == dc)
                            && best.is_none_or(|x| edge < x.0)
                        {
                            best = Some((edge, w, sign));
                        }
                    }
                    let (edge, w, sign) = best.expect("distance labels are consistent");
                    chain.add_term(edge, sign);
                    cur = w;
                }
                Ok(chain)
            }
        }
    }

    /// Cells whose barycenter lies within path distance `r` of the given cells.
    /// The distance at a barycenter is the mean of the distances at the cell's
    /// vertices. With `r = 0` this is the closure of the input under faces.
    pub fn neighborhood(&self, cells: &CellSet, r: &Q) -> CellSet {
        let closure = self.closure(cells.iter());
        if !r.is_positive() || closure.is_empty() {
            return closure;
        }
        let sources: Vec<CellId> = closure
            .iter()
            .copied()
            .filter(|&c| self.dim(c) == 0)
            .collect();
        let limit = r + &self.max_cell_path_diam;
        let dist = self.path_distances_from(&sources, Some(&limit));
        let mut out = closure;
        let mut seen = CellSet::new();
        let mut stack: Vec<CellId> = dist.keys().copied().collect();
        while let Some(c) = stack.pop() {
            if !seen.insert(c) {
                continue;
            }
            let verts = self.vertices(c);
            let mut sum = Q::zero();
            let mut all = true;
            for v in &verts {
                match dist.get(v) {
                    Some(d) => sum += d,
                    None => {
                        all = false;
                        break;
                    }
                }
            }
            if !all {
                continue;
            }
            if sum <= r * qi(verts.len() as i64) {
                out.insert(c);
                stack.extend(self.coboundary(c).into_iter().map(|(f, _)| f));
            }
        }
        out
    }
}

fn check_budget(total: u64, budget: u64) -> Result<()> {
    if total > budget || total > u32::MAX as u64 {
        return Err(Error::Budget {
            what: "cells",
            requested: total,
            budget: budget.min(u32::MAX as u64),
        });
    }
    Ok(())
}

fn collect_faces_of_dim(e: &ExplicitRepr, c: CellId, d: usize, out: &mut BTreeSet<CellId>) {
    if e.dim(c) == d {
        out.insert(c);
        return;
    }
    for &(f, _) in e.boundary(c) {
        collect_faces_of_dim(e, f, d, out);
    }
}

#[cfg(test)]
pub(crate) mod tests;
