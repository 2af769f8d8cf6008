//! Decomposition of cycles into round pieces and the Euclidean-type filling
//! built on it.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{check_cycle, cone_filling};
use crate::chains::{slice_min, Chain};
use crate::complex::{CellId, MetricComplex};
use crate::error::{Error, Result};
use crate::numeric::{from_f64_exact, powf, qi, to_f64, Q};

/// Constants of the round decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundParams {
    /// Roundness: diam(R) <= beta * M(R)^(1/k).
    pub beta: f64,
    /// Required shrinkage of the residual: M(T') <= (1 - eps) M(T).
    pub eps: f64,
    /// Mass overhead: sum M(R_i) <= (1 + lambda) M(T).
    pub lambda: f64,
    /// Density trigger: ||T||(B(x, r)) >= rho0 * r^k.
    pub rho0: f64,
    /// Slice acceptance: M(S) <= kappa_slice * ||T||(band) / r.
    pub kappa_slice: f64,
    /// Number of retries with doubled rho0 when a clause fails.
    pub retries: usize,
    /// Upper bound on extracted pieces per attempt.
    pub max_pieces: usize,
}

impl Default for RoundParams {
    fn default() -> Self {
        RoundParams {
            beta: 8.0,
            eps: 0.1,
            lambda: 1.0,
            rho0: 0.5,
            kappa_slice: 4.0,
            retries: 3,
            max_pieces: 256,
        }
    }
}

/// Measured clause values of a decomposition T = T' + sum R_i.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RoundClauses {
    /// max diam(R_i) / M(R_i)^(1/k).
    pub roundness: f64,
    /// M(T') / M(T).
    pub residual_ratio: f64,
    /// sum M(R_i) / M(T).
    pub total_ratio: f64,
}

impl RoundClauses {
    /// Names of the clauses violated under `p`.
    pub fn violations(&self, p: &RoundParams) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.roundness > p.beta + 1e-12 {
            v.push("roundness");
        }
        if self.residual_ratio > 1.0 - p.eps + 1e-12 {
            v.push("residual");
        }
        if self.total_ratio > 1.0 + p.lambda + 1e-12 {
            v.push("total mass");
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct RoundDecomposition {
    pub residual: Chain,
    pub pieces: Vec<Chain>,
    pub clauses: RoundClauses,
    /// Density threshold of the accepted attempt.
    pub rho0: f64,
}

/// Model diameter over the support vertices.
fn diam(x: &MetricComplex, t: &Chain) -> f64 {
    t.diam(x)
}

/// Path distance from `centre` to every vertex (products: hop count times h).
struct PathField<'a> {
    x: &'a MetricComplex,
    centre: CellId,
    table: Option<HashMap<CellId, Q>>,
}

impl<'a> PathField<'a> {
    fn new(x: &'a MetricComplex, centre: CellId) -> Self {
        let table = x.product().is_none().then(|| x.path_distances_from(&[centre], None));
        PathField { x, centre, table }
    }

    fn exact(&self, v: CellId) -> Q {
        match (&self.table, self.x.product()) {
            (Some(t), _) => t.get(&v).cloned().unwrap_or_else(|| qi(i64::MAX / 4)),
            (None, Some(p)) => qi(p.hop_dist(self.centre, v) as i64) * p.edge_length(),
            _ => unreachable!(),
        }
    }

    fn approx(&self, v: CellId) -> f64 {
        match (&self.table, self.x.product()) {
            (Some(t), _) => t.get(&v).map(to_f64).unwrap_or(f64::INFINITY),
            (None, Some(p)) => p.hop_dist(self.centre, v) as f64 * to_f64(p.edge_length()),
            _ => unreachable!(),
        }
    }
}

fn clauses(x: &MetricComplex, t: &Chain, residual: &Chain, pieces: &[Chain]) -> RoundClauses {
    let k = t.dim().max(1) as f64;
    let m = t.mass_f64(x);
    let mut out = RoundClauses::default();
    if m == 0.0 {
        return out;
    }
    for r in pieces {
        let mr = r.mass_f64(x);
        if mr > 0.0 {
            out.roundness = out.roundness.max(diam(x, r) / powf(mr, 1.0 / k));
        }
        out.total_ratio += mr / m;
    }
    out.residual_ratio = residual.mass_f64(x) / m;
    out
}

/// Greedy extraction of round pieces without enforcing the clauses.
fn extract(x: &MetricComplex, t: &Chain, p: &RoundParams, rho0: f64) -> Result<(Chain, Vec<Chain>)> {
    let k = t.dim();
    let m = t.mass_f64(x);
    if t.is_zero() {
        return Ok((t.clone(), Vec::new()));
    }
    if diam(x, t) <= p.beta * powf(m, 1.0 / k as f64) {
        return Ok((Chain::zero(k), vec![t.clone()]));
    }
    let r_min = 2.0 * to_f64(x.max_cell_path_diam());
    let mut current = t.clone();
    let mut pieces = Vec::new();
    let mut rejected: BTreeSet<(CellId, u32)> = BTreeSet::new();
    while !current.is_zero() && pieces.len() < p.max_pieces {
        let verts = current.support_vertices(x);
        let span = diam(x, &current).max(r_min);
        let mut radii = Vec::new();
        let mut r = r_min;
        while r <= 2.0 * span {
            radii.push(r);
            r *= 2.0;
        }
        // (mass in ball, centre, radius index) of every firing trigger
        let mut triggers: Vec<(f64, CellId, u32)> = Vec::new();
        for &c in &verts {
            let field = PathField::new(x, c);
            let mut cells: Vec<(f64, f64)> = current
                .iter()
                .map(|(cell, v)| {
                    let far = x.vertices(cell).into_iter().map(|u| field.approx(u)).fold(0.0, f64::max);
                    (far, v.unsigned_abs() as f64 * to_f64(x.volume(cell)))
                })
                .collect();
            cells.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut acc = 0.0;
            let mut i = 0;
            for (j, &r) in radii.iter().enumerate() {
                while i < cells.len() && cells[i].0 <= r + 1e-12 {
                    acc += cells[i].1;
                    i += 1;
                }
                if acc >= rho0 * powf(r, k as f64) && !rejected.contains(&(c, j as u32)) {
                    triggers.push((acc, c, j as u32));
                }
            }
        }
        triggers.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut progressed = false;
        for &(_, c, j) in &triggers {
            let r = radii[j as usize];
            let field = PathField::new(x, c);
            let rho = |v: CellId| field.exact(v);
            let a = from_f64_exact(r)?;
            let b = &a * qi(2);
            let s = slice_min(x, &current, &rho, &a, &b)?;
            let band = to_f64(&s.band_mass);
            if s.slice.mass_f64(x) > p.kappa_slice * band / r + 1e-12 || s.inside.is_zero() {
                rejected.insert((c, j));
                continue;
            }
            let f = euclidean_filling_with(x, &s.slice, p)?.chain;
            let piece = &s.inside - &f;
            let next = &current - &piece;
            if piece.is_zero() || next.mass(x) >= current.mass(x) {
                rejected.insert((c, j));
                continue;
            }
            pieces.push(piece);
            current = next;
            progressed = true;
            break;
        }
        if !progressed {
            break;
        }
    }
    Ok((current, pieces))
}

/// Decomposes a cycle T = T' + sum R_i into round pieces: greedy extraction
/// around the densest triggering ball, cutting at the cheapest slice between r
/// and 2r and closing each piece with a filling of its slice. The clauses are
/// checked and the attempt retried with doubled density threshold on failure.
pub fn round_decompose(x: &MetricComplex, t: &Chain, p: &RoundParams) -> Result<RoundDecomposition> {
    check_cycle(x, t)?;
    if t.dim() == 0 {
        return Err(Error::invalid("round decomposition needs a cycle of dimension at least 1"));
    }
    let mut rho0 = p.rho0;
    let mut best: Option<(usize, RoundDecomposition, Vec<&'static str>)> = None;
    for _ in 0..=p.retries {
        let (residual, pieces) = extract(x, t, p, rho0)?;
        verify_sum(x, t, &residual, &pieces)?;
        let cl = clauses(x, t, &residual, &pieces);
        let bad = cl.violations(p);
        let dec = RoundDecomposition {
            residual,
            pieces,
            clauses: cl,
            rho0,
        };
        if bad.is_empty() {
            return Ok(dec);
        }
        if best.as_ref().is_none_or(|(n, _, _)| bad.len() < *n) {
            best = Some((bad.len(), dec, bad));
        }
        rho0 *= 2.0;
    }
    let (_, dec, bad) = best.expect("at least one attempt");
    Err(Error::verification(format!(
        "round decomposition violates {} (roundness {:.3}, residual {:.3}, total {:.3}, rho0 {})",
        bad.join(", "),
        dec.clauses.roundness,
        dec.clauses.residual_ratio,
        dec.clauses.total_ratio,
        dec.rho0
    )))
}

fn verify_sum(x: &MetricComplex, t: &Chain, residual: &Chain, pieces: &[Chain]) -> Result<()> {
    let mut sum = residual.clone();
    for r in pieces {
        if !r.is_cycle(x) {
            return Err(Error::verification("round piece is not a cycle"));
        }
        sum += r;
    }
    if sum != *t {
        return Err(Error::verification("round pieces do not sum to the cycle"));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct EuclideanFilling {
    pub chain: Chain,
    /// M(V) / M(T)^(1 + 1/k) (0 for 0-cycles and the zero cycle).
    pub ratio: f64,
    pub pieces: usize,
}

/// Filling with mass of order M(T)^(1+1/k): round pieces are coned from their
/// least support vertex and the residual is filled recursively (or coned when
/// the decomposition makes no progress). 0-cycles are coned directly.
pub fn euclidean_filling(x: &MetricComplex, t: &Chain) -> Result<EuclideanFilling> {
    euclidean_filling_with(x, t, &RoundParams::default())
}

pub fn euclidean_filling_with(x: &MetricComplex, t: &Chain, p: &RoundParams) -> Result<EuclideanFilling> {
    check_cycle(x, t)?;
    let k = t.dim();
    if t.is_zero() {
        return Ok(EuclideanFilling {
            chain: Chain::zero(k + 1),
            ratio: 0.0,
            pieces: 0,
        });
    }
    let apex = |c: &Chain| c.support_vertices(x)[0];
    let (chain, pieces) = if k == 0 {
        (cone_filling(x, t, apex(t))?.chain, 1)
    } else {
        let mut v = Chain::zero(k + 1);
        let mut rest = t.clone();
        let mut count = 0;
        while !rest.is_zero() {
            let (residual, pieces) = extract(x, &rest, p, p.rho0)?;
            for r in &pieces {
                v += &cone_filling(x, r, apex(r))?.chain;
            }
            count += pieces.len();
            if pieces.is_empty() || residual.mass(x) >= rest.mass(x) {
                if !residual.is_zero() {
                    v += &cone_filling(x, &residual, apex(&residual))?.chain;
                    count += 1;
                }
                break;
            }
            rest = residual;
        }
        (v, count)
    };
    if chain.boundary(x) != *t {
        return Err(Error::verification("euclidean filling does not bound the cycle"));
    }
    let ratio = if k == 0 {
        0.0
    } else {
        chain.mass_f64(x) / powf(t.mass_f64(x), 1.0 + 1.0 / k as f64)
    };
    Ok(EuclideanFilling { chain, ratio, pieces })
}
