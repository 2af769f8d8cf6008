//! Cellular chain maps given by vertex displacements, their chain homotopies to
//! the identity, and the decomposition of T - f_#T into small cycles.

use std::collections::HashMap;

use serde::Serialize;

use crate::chains::{slice_min, Chain};
use crate::complex::{CellId, FactorCell, MetricComplex};
use crate::cover::{sort_with_sign, Covering, NerveMap};
use crate::error::{Error, Result};
use crate::fill::{check_cycle, cone_filling};
use crate::numeric::{to_f64, Q};

/// Kuhn triangulation of a product cell as (vertex tuple, sign). The cube
/// e_1 x ... x e_k is parametrised with 0 at the parent end of each edge; the
/// simplex of a permutation pi runs from the all-parent corner flipping the
/// factors in the order pi and carries the sign of pi.
pub fn kuhn_simplices(x: &MetricComplex, c: CellId) -> Result<Vec<(Vec<CellId>, i64)>> {
    let p = x
        .product()
        .ok_or_else(|| Error::Unsupported("simplicial subdivision of custom cells".into()))?;
    let cells = p.decode(c);
    let edges: Vec<usize> = (0..cells.len()).filter(|&j| cells[j].is_edge()).collect();
    let mut start: Vec<FactorCell> = cells.clone();
    let mut heads = Vec::new();
    for &j in &edges {
        let FactorCell::Edge(u) = cells[j] else { unreachable!() };
        start[j] = FactorCell::Node(p.factors()[j].parent(u).expect("edge has a parent"));
        heads.push(FactorCell::Node(u));
    }
    let mut out = Vec::new();
    for perm in permutations(edges.len()) {
        let sign = sort_with_sign(&perm).map_or(0, |s| s.1);
        let mut cur = start.clone();
        let mut verts = vec![p.encode(&cur)];
        for &t in &perm {
            cur[edges[t]] = heads[t];
            verts.push(p.encode(&cur));
        }
        out.push((verts, sign));
    }
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

/// A chain map on cellular chains determined cellwise.
pub trait CellChainMap {
    fn complex(&self) -> &MetricComplex;
    fn vertex_image(&mut self, v: CellId) -> Result<CellId>;
    fn cell_image(&mut self, c: CellId) -> Result<Chain>;

    fn chain_image(&mut self, t: &Chain) -> Result<Chain> {
        let mut out = Chain::zero(t.dim());
        for (c, v) in t.iter() {
            out.add_scaled(&self.cell_image(c)?, v);
        }
        Ok(out)
    }
}

pub struct IdentityMap<'a>(pub &'a MetricComplex);

impl CellChainMap for IdentityMap<'_> {
    fn complex(&self) -> &MetricComplex {
        self.0
    }

    fn vertex_image(&mut self, v: CellId) -> Result<CellId> {
        Ok(v)
    }

    fn cell_image(&mut self, c: CellId) -> Result<Chain> {
        Ok(Chain::cell(self.0.dim(c), c, 1))
    }
}

/// Rounding through the nerve: a vertex goes to the anchor of its label and a
/// cell to the sum over its Kuhn simplices of the realised label simplices.
pub struct NerveRounding<'a> {
    x: &'a MetricComplex,
    labels: HashMap<CellId, u32>,
    phi: NerveMap<'a>,
    memo: HashMap<CellId, Chain>,
}

impl<'a> NerveRounding<'a> {
    pub fn new(x: &'a MetricComplex, labels: HashMap<CellId, u32>, phi: NerveMap<'a>) -> Self {
        NerveRounding {
            x,
            labels,
            phi,
            memo: HashMap::new(),
        }
    }

    pub fn phi(&mut self) -> &mut NerveMap<'a> {
        &mut self.phi
    }

    fn label(&self, v: CellId) -> Result<u32> {
        self.labels
            .get(&v)
            .copied()
            .ok_or_else(|| Error::Uncovered(format!("vertex {v} has no nerve label")))
    }
}

impl CellChainMap for NerveRounding<'_> {
    fn complex(&self) -> &MetricComplex {
        self.x
    }

    fn vertex_image(&mut self, v: CellId) -> Result<CellId> {
        Ok(self.phi.anchor(self.label(v)?))
    }

    fn cell_image(&mut self, c: CellId) -> Result<Chain> {
        if let Some(hit) = self.memo.get(&c) {
            return Ok(hit.clone());
        }
        let mut out = Chain::zero(self.x.dim(c));
        for (verts, sign) in kuhn_simplices(self.x, c)? {
            let labels: Vec<u32> = verts.iter().map(|&v| self.label(v)).collect::<Result<_>>()?;
            out.add_scaled(&self.phi.simplex(&labels)?, sign);
        }
        self.memo.insert(c, out.clone());
        Ok(out)
    }
}

/// Chain homotopy H from f_# to the identity, built cellwise:
/// H(v) is the geodesic from f(v) to v and H(c) is the cone over
/// c - f_#c - H(boundary c) from the least vertex of c, so that
/// boundary H + H boundary = id - f_#.
pub struct Homotopy {
    memo: HashMap<CellId, Chain>,
}

impl Default for Homotopy {
    fn default() -> Self {
        Self::new()
    }
}

impl Homotopy {
    pub fn new() -> Self {
        Homotopy { memo: HashMap::new() }
    }

    pub fn cell(&mut self, f: &mut dyn CellChainMap, c: CellId) -> Result<Chain> {
        if let Some(hit) = self.memo.get(&c) {
            return Ok(hit.clone());
        }
        let x = f.complex();
        let d = x.dim(c);
        let out = if d == 0 {
            let w = f.vertex_image(c)?;
            let x = f.complex();
            if w == c {
                Chain::zero(1)
            } else {
                x.geodesic_path(w, c)?
            }
        } else {
            let bd: Vec<(CellId, i8)> = x.boundary(c);
            let apex = *x.vertices(c).iter().min().expect("cell has vertices");
            let mut rhs = Chain::cell(d, c, 1);
            rhs -= &f.cell_image(c)?;
            for (g, s) in bd {
                rhs.add_scaled(&self.cell(f, g)?, -(s as i64));
            }
            let x = f.complex();
            if rhs.is_zero() {
                Chain::zero(d + 1)
            } else {
                cone_filling(x, &rhs, apex)?.chain
            }
        };
        self.memo.insert(c, out.clone());
        Ok(out)
    }

    pub fn chain(&mut self, f: &mut dyn CellChainMap, t: &Chain) -> Result<Chain> {
        let mut out = Chain::zero(t.dim() + 1);
        for (c, v) in t.iter() {
            out.add_scaled(&self.cell(f, c)?, v);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DisplacementStats {
    /// Largest d(v, f(v)) / s over support vertices.
    pub displacement: f64,
    /// Slicing level per member (members not reached are skipped).
    pub levels: Vec<(usize, f64)>,
    /// sum M(boundary T_i) * s / M(T).
    pub slice_ratio: f64,
    /// sum M(R_i) / M(T).
    pub mass_ratio: f64,
    /// max diam(R_i) / s.
    pub diam_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct DisplacementDecomposition {
    /// (member index, R_i) for the non-zero pieces.
    pub pieces: Vec<(usize, Chain)>,
    pub stats: DisplacementStats,
}

/// Writes T - f_#T as a sum of cycles R_i = T_i - f_#T_i - H(boundary T_i),
/// where T = sum T_i comes from slicing the remainder at the cheapest level
/// of the path distance to each member B_i in turn. Levels lie between the
/// largest cell diameter (so every cell is eventually taken) and s/2.
pub fn displacement_decompose(
    t: &Chain,
    cov: &Covering,
    f: &mut dyn CellChainMap,
    max_displacement: Option<f64>,
) -> Result<DisplacementDecomposition> {
    let x = f.complex();
    check_cycle(x, t)?;
    let s = to_f64(&cov.s);
    let mut stats = DisplacementStats::default();
    let support = t.support_vertices(x);
    for &v in &support {
        let w = f.vertex_image(v)?;
        let x = f.complex();
        stats.displacement = stats.displacement.max(x.vertex_dist(v, w) / s);
    }
    if let Some(l) = max_displacement {
        if stats.displacement > l + 1e-12 {
            return Err(Error::invalid(format!(
                "displacement {:.4} s exceeds the bound {l} s",
                stats.displacement
            )));
        }
    }
    let x = f.complex();
    let mt = t.mass_f64(x);
    let floor = x.max_cell_path_diam().clone();
    let half = &cov.s / Q::from_integer(2.into());
    let (a, b) = if half > floor {
        (floor.clone(), half)
    } else {
        (floor.clone(), &floor + x.max_cell_path_diam())
    };
    let mut rest = t.clone();
    let mut slices = Vec::new();
    for (i, member) in cov.members.iter().enumerate() {
        if rest.is_zero() {
            break;
        }
        let x = f.complex();
        let dist: HashMap<CellId, Q> = match x.product() {
            // path distances in a product are sums of tree distances; only the
            // closure of the remaining chain is needed
            Some(p) => rest
                .support(x)
                .into_iter()
                .filter(|&c| x.dim(c) == 0)
                .map(|v| {
                    let hops = member.iter().map(|&u| p.hop_dist(u, v)).min().unwrap_or(u64::MAX);
                    (v, Q::from_integer((hops.min(1 << 40) as i64).into()) * p.edge_length())
                })
                .collect(),
            None => x.path_distances_from(member, Some(&b)),
        };
        let rho = |v: CellId| -> Q { dist.get(&v).map_or_else(|| b.clone(), |d| d.clone().min(b.clone())) };
        let sl = slice_min(x, &rest, &rho, &a, &b)?;
        if sl.inside.is_zero() {
            continue;
        }
        stats.levels.push((i, to_f64(&sl.level)));
        stats.slice_ratio += sl.inside.boundary(x).mass_f64(x);
        rest -= &sl.inside;
        slices.push((i, sl.inside));
    }
    if !rest.is_zero() {
        return Err(Error::verification("the covering does not cover the support of the cycle"));
    }
    let mut h = Homotopy::new();
    let mut pieces = Vec::new();
    let mut total = Chain::zero(t.dim());
    for (i, ti) in slices {
        let x = f.complex();
        let bd = ti.boundary(x);
        let mut r = ti.clone();
        r -= &f.chain_image(&ti)?;
        r -= &h.chain(f, &bd)?;
        let x = f.complex();
        if !r.is_cycle(x) {
            return Err(Error::verification(format!("displacement piece {i} is not a cycle")));
        }
        total += &r;
        if !r.is_zero() {
            stats.mass_ratio += r.mass_f64(x);
            stats.diam_ratio = stats.diam_ratio.max(r.diam(x) / s);
            pieces.push((i, r));
        }
    }
    let expect = t - &f.chain_image(t)?;
    if total != expect {
        return Err(Error::verification("displacement pieces do not sum to T - f_#T"));
    }
    if mt > 0.0 {
        stats.slice_ratio *= s / mt;
        stats.mass_ratio /= mt;
    }
    Ok(DisplacementDecomposition { pieces, stats })
}
