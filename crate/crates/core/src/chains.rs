//! Integral cellular chains: sparse maps from cells of one dimension to non-zero integers.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::complex::{CellId, CellSet, MetricComplex};
use crate::error::{Error, Result};
use crate::numeric::{q_to_string, qi, sqrt_f64, to_f64, Q};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Chain {
    dim: usize,
    terms: BTreeMap<CellId, i64>,
}

impl Chain {
    pub fn zero(dim: usize) -> Self {
        Chain {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn cell(dim: usize, c: CellId, coeff: i64) -> Self {
        let mut ch = Chain::zero(dim);
        ch.add_term(c, coeff);
        ch
    }

    /// Builds a chain, summing repeated cells and checking that every cell exists
    /// and has dimension `dim`.
    pub fn new(x: &MetricComplex, dim: usize, terms: impl IntoIterator<Item = (CellId, i64)>) -> Result<Self> {
        let mut ch = Chain::zero(dim);
        for (c, v) in terms {
            if !x.contains(c) {
                return Err(Error::invalid(format!("cell {c} does not exist")));
            }
            if x.dim(c) != dim {
                return Err(Error::invalid(format!(
                    "cell {c} has dimension {}, chain has dimension {dim}",
                    x.dim(c)
                )));
            }
            ch.add_term(c, v);
        }
        Ok(ch)
    }

    /// Builds a chain without validating cells (callers guarantee dimensions).
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (CellId, i64)>) -> Self {
        let mut ch = Chain::zero(dim);
        for (c, v) in terms {
            ch.add_term(c, v);
        }
        ch
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<CellId, i64> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellId, i64)> + '_ {
        self.terms.iter().map(|(c, v)| (*c, *v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, c: CellId) -> i64 {
        self.terms.get(&c).copied().unwrap_or(0)
    }

    pub fn add_term(&mut self, c: CellId, v: i64) {
        if v == 0 {
            return;
        }
        let e = self.terms.entry(c).or_insert(0);
        *e += v;
        if *e == 0 {
            self.terms.remove(&c);
        }
    }

    pub fn add_scaled(&mut self, other: &Chain, k: i64) {
        assert_eq!(self.dim, other.dim, "adding chains of different dimension");
        for (c, v) in other.iter() {
            self.add_term(c, k * v);
        }
    }

    pub fn scaled(&self, k: i64) -> Chain {
        if k == 0 {
            return Chain::zero(self.dim);
        }
        Chain {
            dim: self.dim,
            terms: self.terms.iter().map(|(c, v)| (*c, v * k)).collect(),
        }
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> i64 {
        self.terms.values().map(|v| v.abs()).sum()
    }

    pub fn boundary(&self, x: &MetricComplex) -> Chain {
        let mut out = Chain::zero(self.dim.saturating_sub(1));
        if self.dim == 0 {
            return out;
        }
        for (c, v) in self.iter() {
            for (f, s) in x.boundary(c) {
                out.add_term(f, v * s as i64);
            }
        }
        out
    }

    pub fn is_cycle(&self, x: &MetricComplex) -> bool {
        self.dim == 0 || self.boundary(x).is_zero()
    }

    /// Mass: sum over cells of |coefficient| times cell volume.
    pub fn mass(&self, x: &MetricComplex) -> Q {
        match x.uniform_volume(self.dim) {
            Some(v) => qi(self.l1_norm()) * v,
            None => self
                .iter()
                .map(|(c, v)| qi(v.abs()) * x.volume(c))
                .sum(),
        }
    }

    pub fn mass_f64(&self, x: &MetricComplex) -> f64 {
        to_f64(&self.mass(x))
    }

    /// The part of the chain on cells accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(CellId) -> bool) -> Chain {
        Chain {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| keep(**c))
                .map(|(c, v)| (*c, *v))
                .collect(),
        }
    }

    pub fn restrict_to(&self, cells: &CellSet) -> Chain {
        self.restrict(|c| cells.contains(&c))
    }

    /// Cells carrying a non-zero coefficient.
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.terms.keys().copied()
    }

    /// Closed support: cells with non-zero coefficient together with all their faces.
    pub fn support(&self, x: &MetricComplex) -> CellSet {
        x.closure(self.terms.keys())
    }

    pub fn support_vertices(&self, x: &MetricComplex) -> Vec<CellId> {
        if self.dim == 0 {
            return self.cells().collect();
        }
        let mut set = CellSet::new();
        for c in self.cells() {
            set.extend(x.vertices(c));
        }
        set.into_iter().collect()
    }

    /// Largest model distance between vertices of the support (0 for the zero chain).
    pub fn diam(&self, x: &MetricComplex) -> f64 {
        vertex_set_diam(x, &self.support_vertices(x))
    }
}

/// Largest model distance between two vertices of the set.
pub fn vertex_set_diam(x: &MetricComplex, verts: &[CellId]) -> f64 {
    if let Some(p) = x.product() {
        let nodes: Vec<Vec<u32>> = verts.iter().map(|&v| p.vertex_nodes(v)).collect();
        let mut best = 0u64;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let d: u64 = p
                    .factors()
                    .iter()
                    .enumerate()
                    .map(|(f, fac)| {
                        let d = fac.dist(nodes[i][f], nodes[j][f]) as u64;
                        d * d
                    })
                    .sum();
                best = best.max(d);
            }
        }
        let h = p.edge_length();
        sqrt_f64(&(qi(best as i64) * h * h))
    } else {
        let mut best: f64 = 0.0;
        for (i, &u) in verts.iter().enumerate() {
            let dist = x.path_distances_from(&[u], None);
            for &v in &verts[i + 1..] {
                if let Some(d) = dist.get(&v) {
                    best = best.max(to_f64(d));
                }
            }
        }
        best
    }
}

impl Neg for Chain {
    type Output = Chain;
    fn neg(self) -> Chain {
        self.scaled(-1)
    }
}

impl Neg for &Chain {
    type Output = Chain;
    fn neg(self) -> Chain {
        self.scaled(-1)
    }
}

impl AddAssign<&Chain> for Chain {
    fn add_assign(&mut self, rhs: &Chain) {
        self.add_scaled(rhs, 1);
    }
}

impl SubAssign<&Chain> for Chain {
    fn sub_assign(&mut self, rhs: &Chain) {
        self.add_scaled(rhs, -1);
    }
}

impl Add<&Chain> for &Chain {
    type Output = Chain;
    fn add(self, rhs: &Chain) -> Chain {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Chain> for &Chain {
    type Output = Chain;
    fn sub(self, rhs: &Chain) -> Chain {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

/// Result of slicing a chain by a sublevel set of a vertex function.
#[derive(Clone, Debug)]
pub struct Slice {
    /// Chosen level r.
    pub level: Q,
    /// The slice S_r = boundary(T restricted to B_r) - (boundary T) restricted to B_r.
    pub slice: Chain,
    /// T restricted to the sublevel cells B_r.
    pub inside: Chain,
    /// Mass of T on cells meeting the open band a < rho < b.
    pub band_mass: Q,
    /// M(S_r) (b - a) / band mass, or 0 when the band carries no mass.
    pub coarea_ratio: f64,
}

/// Picks the level r in (a, b) minimising the mass of the slice of `t` by
/// B_r = {cells all of whose vertices have rho <= r}.
///
/// The function `rho` is evaluated at vertices and must change by at most the
/// edge length across every edge of the support. Candidate levels are the values
/// of `rho` at support vertices strictly inside (a, b); ties go to the smallest
/// level, and an empty band yields r = a.
pub fn slice_min(
    x: &MetricComplex,
    t: &Chain,
    rho: &dyn Fn(CellId) -> Q,
    a: &Q,
    b: &Q,
) -> Result<Slice> {
    if a >= b {
        return Err(Error::invalid("slice interval must satisfy a < b"));
    }
    let support = t.support(x);
    let mut values: HashMap<CellId, Q> = HashMap::new();
    for &c in &support {
        if x.dim(c) == 0 {
            values.insert(c, rho(c));
        }
    }
    for &c in &support {
        if x.dim(c) == 1 {
            let vs = x.vertices(c);
            let jump = (&values[&vs[0]] - &values[&vs[1]]).abs();
            if &jump > x.volume(c) {
                return Err(Error::NotLipschitz {
                    edge: c,
                    jump: q_to_string(&jump),
                    length: q_to_string(x.volume(c)),
                });
            }
        }
    }
    let range = |c: CellId| -> (Q, Q) {
        let vs = x.vertices(c);
        let mut lo = values[&vs[0]].clone();
        let mut hi = lo.clone();
        for v in &vs[1..] {
            let r = &values[v];
            if r < &lo {
                lo = r.clone();
            }
            if r > &hi {
                hi = r.clone();
            }
        }
        (lo, hi)
    };

    let mut band_mass = Q::zero();
    for (c, v) in t.iter() {
        let (lo, hi) = range(c);
        if &lo < b && &hi > a {
            band_mass += qi(v.abs()) * x.volume(c);
        }
    }

    let mut levels: Vec<Q> = t
        .support_vertices(x)
        .into_iter()
        .map(|v| values[&v].clone())
        .filter(|r| r > a && r < b)
        .collect();
    levels.sort();
    levels.dedup();
    if levels.is_empty() {
        levels.push(a.clone());
    }

    // Sweep the levels upward, maintaining S_r and its mass incrementally.
    let bt = t.boundary(x);
    let mut t_cells: Vec<(Q, CellId, i64)> = t.iter().map(|(c, v)| (range(c).1, c, v)).collect();
    t_cells.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.cmp(&q.1)));
    let mut bt_cells: Vec<(Q, CellId, i64)> = bt.iter().map(|(c, v)| (range(c).1, c, v)).collect();
    bt_cells.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.cmp(&q.1)));
    let mut s: HashMap<CellId, i64> = HashMap::new();
    let mut mass = Q::zero();
    let bump = |s: &mut HashMap<CellId, i64>, mass: &mut Q, f: CellId, dv: i64| {
        let e = s.entry(f).or_insert(0);
        let before = e.abs();
        *e += dv;
        let after = e.abs();
        if before != after {
            *mass += qi(after - before) * x.volume(f);
        }
    };
    let (mut ti, mut bi) = (0, 0);
    let mut best: Option<(Q, Q)> = None;
    for r in &levels {
        while ti < t_cells.len() && &t_cells[ti].0 <= r {
            let (_, c, v) = &t_cells[ti];
            for (f, sg) in x.boundary(*c) {
                bump(&mut s, &mut mass, f, v * sg as i64);
            }
            ti += 1;
        }
        while bi < bt_cells.len() && &bt_cells[bi].0 <= r {
            let (_, c, v) = &bt_cells[bi];
            bump(&mut s, &mut mass, *c, -v);
            bi += 1;
        }
        if best.as_ref().is_none_or(|(m, _)| &mass < m) {
            best = Some((mass.clone(), r.clone()));
        }
    }
    let (_, level) = best.unwrap();
    let inside = t.restrict(|c| range(c).1 <= level);
    let slice = &inside.boundary(x) - &bt.restrict(|c| range(c).1 <= level);
    let slice_mass = slice.mass(x);
    let coarea_ratio = if band_mass.is_zero() {
        0.0
    } else {
        to_f64(&(slice_mass * (b - a) / &band_mass))
    };
    Ok(Slice {
        level,
        slice,
        inside,
        band_mass,
        coarea_ratio,
    })
}

/// A cellular map between complexes given by its action on vertices; each cell
/// must map onto a cell of the target (possibly of lower dimension).
pub struct CellMap<'a> {
    pub source: &'a MetricComplex,
    pub target: &'a MetricComplex,
    pub vertex_map: HashMap<CellId, CellId>,
}

#[derive(Clone, Debug)]
pub struct Pushforward {
    pub chain: Chain,
    /// Largest ratio of image-edge length to edge length over edges of the support.
    pub max_cell_lip: f64,
}

impl CellMap<'_> {
    fn image_vertex(&self, v: CellId) -> Result<CellId> {
        self.vertex_map
            .get(&v)
            .copied()
            .ok_or_else(|| Error::invalid(format!("vertex {v} has no image")))
    }

    /// Image of a single cell: Some((target cell, sign)) or None when degenerate.
    fn image_cell(
        &self,
        c: CellId,
        memo: &mut HashMap<CellId, Option<(CellId, i8)>>,
    ) -> Result<Option<(CellId, i8)>> {
        if let Some(r) = memo.get(&c) {
            return Ok(*r);
        }
        let k = self.source.dim(c);
        let mut image: Vec<CellId> = self
            .source
            .vertices(c)
            .into_iter()
            .map(|v| self.image_vertex(v))
            .collect::<Result<_>>()?;
        image.sort();
        image.dedup();
        let result = if k == 0 {
            Some((image[0], 1))
        } else {
            let target = find_cell_with_vertices(self.target, &image).ok_or_else(|| {
                Error::invalid(format!("image of cell {c} is not a cell of the target"))
            })?;
            if self.target.dim(target) < k {
                None
            } else {
                let mut img_bd = Chain::zero(k - 1);
                for (f, s) in self.source.boundary(c) {
                    if let Some((g, t)) = self.image_cell(f, memo)? {
                        img_bd.add_term(g, (s * t) as i64);
                    }
                }
                let tb = Chain::from_terms(k - 1, self.target.boundary(target).into_iter().map(|(f, s)| (f, s as i64)));
                if img_bd == tb {
                    Some((target, 1))
                } else if img_bd == -&tb {
                    Some((target, -1))
                } else {
                    return Err(Error::invalid(format!(
                        "map is not cellular on cell {c}: boundary images do not match"
                    )));
                }
            }
        };
        memo.insert(c, result);
        Ok(result)
    }

    /// Pushes a chain forward; degenerate cells map to zero.
    pub fn pushforward(&self, t: &Chain) -> Result<Pushforward> {
        let mut memo = HashMap::new();
        let mut chain = Chain::zero(t.dim());
        for (c, v) in t.iter() {
            if let Some((g, s)) = self.image_cell(c, &mut memo)? {
                chain.add_term(g, v * s as i64);
            }
        }
        let mut max_cell_lip: f64 = 0.0;
        let support = t.support(self.source);
        for &e in &support {
            if self.source.dim(e) == 1 {
                let vs = self.source.vertices(e);
                let (a, b) = (self.image_vertex(vs[0])?, self.image_vertex(vs[1])?);
                let len = to_f64(self.source.volume(e));
                let img = if a == b { 0.0 } else { self.target.vertex_dist(a, b) };
                max_cell_lip = max_cell_lip.max(img / len);
            }
        }
        Ok(Pushforward {
            chain,
            max_cell_lip,
        })
    }
}

/// The cell whose vertex set is exactly `verts` (sorted), if any.
pub fn find_cell_with_vertices(x: &MetricComplex, verts: &[CellId]) -> Option<CellId> {
    if verts.len() == 1 {
        return Some(verts[0]);
    }
    let mut frontier = vec![verts[0]];
    let mut seen = CellSet::new();
    while let Some(c) = frontier.pop() {
        for (f, _) in x.coboundary(c) {
            if !seen.insert(f) {
                continue;
            }
            let mut vs = x.vertices(f);
            if vs.len() > verts.len() {
                continue;
            }
            vs.sort();
            if vs.iter().all(|v| verts.binary_search(v).is_ok()) {
                if vs.len() == verts.len() {
                    return Some(f);
                }
                frontier.push(f);
            }
        }
    }
    None
}

#[derive(Serialize, Deserialize)]
struct ChainFile {
    dim: usize,
    terms: Vec<(u32, i64)>,
}

impl Chain {
    pub fn to_json(&self) -> String {
        let file = ChainFile {
            dim: self.dim,
            terms: self.iter().map(|(c, v)| (c.0, v)).collect(),
        };
        serde_json::to_string(&file).expect("chain serialises")
    }

    pub fn from_json(x: &MetricComplex, text: &str) -> Result<Chain> {
        let file: ChainFile = serde_json::from_str(text)?;
        Chain::new(x, file.dim, file.terms.into_iter().map(|(c, v)| (CellId(c), v)))
    }

    /// CSV with columns cell_id, coeff, volume.
    pub fn to_csv(&self, x: &MetricComplex) -> String {
        let mut out = String::from("cell_id,coeff,volume\n");
        for (c, v) in self.iter() {
            out.push_str(&format!("{},{},{}\n", c, v, q_to_string(x.volume(c))));
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    pub(crate) use super::tests::block;
}
