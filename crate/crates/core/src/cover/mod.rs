//! Bounded-multiplicity coverings of vertex sets and their nerves.

mod nerve;

pub use nerve::{
    nerve, phi_psi_displacement, psi, psi_lipschitz, sort_with_sign, Nerve, NerveMap, NervePoint, PhiStats,
};
pub(crate) use nerve::{psi_with, TauField};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::complex::{CellId, MetricComplex, MetricKind};
use crate::error::{Error, Result};
use crate::numeric::{q_from_json, q_to_string, qi, qr, sqrt_f64, Q};

/// A covering of a vertex set by disjoint members.
///
/// `c` is the diameter constant: every member has diameter at most `c * s`.
/// `multiplicity_bound` bounds how many members any closed ball of radius
/// `s / 2` centred at a covered vertex can meet.
#[derive(Clone, Debug)]
pub struct Covering {
    pub s: Q,
    pub c_sq: Q,
    pub multiplicity_bound: usize,
    pub members: Vec<Vec<CellId>>,
}

impl Covering {
    pub fn c(&self) -> f64 {
        sqrt_f64(&self.c_sq)
    }

    /// Member index of every covered vertex.
    pub fn member_of(&self) -> BTreeMap<CellId, usize> {
        let mut out = BTreeMap::new();
        for (i, m) in self.members.iter().enumerate() {
            for &v in m {
                out.insert(v, i);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            s: String,
            c: f64,
            members: &'a [Vec<CellId>],
        }
        serde_json::to_string(&Out {
            s: q_to_string(&self.s),
            c: self.c(),
            members: &self.members,
        })
        .expect("covering serialises")
    }

    /// Reads `{s, c, members}`; `c` may be a number or a rational string and
    /// `multiplicity_bound` defaults to the number of members.
    pub fn from_json(text: &str) -> Result<Covering> {
        #[derive(Deserialize)]
        struct In {
            s: serde_json::Value,
            c: serde_json::Value,
            members: Vec<Vec<CellId>>,
            multiplicity_bound: Option<usize>,
        }
        let f: In = serde_json::from_str(text)?;
        let c = q_from_json(&f.c)?;
        let s = q_from_json(&f.s)?;
        if !s.is_positive() {
            return Err(Error::invalid("covering scale must be positive"));
        }
        Ok(Covering {
            s,
            c_sq: &c * &c,
            multiplicity_bound: f.multiplicity_bound.unwrap_or(f.members.len()),
            members: f.members,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    /// Largest number of members met by a closed s/2-ball at a covered vertex.
    pub multiplicity: usize,
    /// Largest member diameter divided by s.
    pub max_diam_ratio: f64,
    pub diam_ok: bool,
    /// Every vertex of Y lies in exactly one member and members lie in Y.
    pub covers_all: bool,
}

impl CoverReport {
    pub fn ok(&self, cov: &Covering) -> bool {
        self.diam_ok && self.covers_all && self.multiplicity <= cov.multiplicity_bound
    }
}

/// Offsets of the shifted-brick pattern, as multiples of the brick side:
/// along axis j the bricks are shifted by sum_i BETA[j][i] * k_i where k_i is
/// the brick index along a later axis i.
fn brick_shift(n: usize, j: usize, i: usize) -> Q {
    match (n, j, i) {
        (2, 0, 1) => qr(1, 2),
        (3, 1, 2) => qr(1, 2),
        (3, 0, 1) => qr(1, 3),
        (3, 0, 2) => qr(2, 3),
        (4, 2, 3) => qr(1, 2),
        (4, 1, 2) => qr(1, 3),
        (4, 1, 3) => qr(2, 3),
        (4, 0, 1) => qr(1, 4),
        (4, 0, 2) => qr(3, 4),
        (4, 0, 3) => qr(1, 2),
        _ => Q::zero(),
    }
}

fn floor_i64(x: &Q) -> i64 {
    x.floor().to_integer().to_i64().expect("brick index fits in i64")
}

/// Builds a covering of `y` at scale `s`, verified before it is returned.
///
/// Grids of dimension n use bricks of side n*s whose rows are shifted against
/// each other, so c = n*sqrt(n) and multiplicity <= n + 1. Tree products use
/// the product of tree coverings by depth annuli of width s grouped by a common
/// ancestor s/2 above the annulus, giving multiplicity <= 4 and c = 3*sqrt(2).
pub fn build_cover(x: &MetricComplex, y: &[CellId], s: &Q) -> Result<Covering> {
    if !s.is_positive() {
        return Err(Error::invalid("covering scale must be positive"));
    }
    let mut y: Vec<CellId> = y.to_vec();
    y.sort();
    y.dedup();
    for &v in &y {
        if !x.contains(v) || x.dim(v) != 0 {
            return Err(Error::invalid(format!("{v} is not a vertex")));
        }
    }
    let p = x
        .product()
        .ok_or_else(|| Error::Unsupported("coverings are built for grids and tree products".into()))?;
    let mut groups: BTreeMap<Vec<i64>, Vec<CellId>> = BTreeMap::new();
    let (c_sq, bound) = match x.kind() {
        MetricKind::Grid { n, h, .. } => {
            let n = *n;
            let side = qi(n as i64) * s;
            for &v in &y {
                let nodes = p.vertex_nodes(v);
                let mut k = vec![0i64; n];
                for j in (0..n).rev() {
                    let shift: Q = (j + 1..n).map(|i| brick_shift(n, j, i) * qi(k[i])).sum();
                    let pos = qi(nodes[j] as i64) * h;
                    k[j] = floor_i64(&(pos / &side - shift));
                }
                groups.entry(k).or_default().push(v);
            }
            (qi((n * n * n) as i64), n + 1)
        }
        MetricKind::TreeProduct { .. } => {
            let half = (s / qi(2)).floor();
            for &v in &y {
                let nodes = p.vertex_nodes(v);
                let mut key = Vec::with_capacity(4);
                for (j, f) in p.factors().iter().enumerate() {
                    let depth = f.depth(nodes[j]);
                    let annulus = floor_i64(&(qi(depth as i64) / s));
                    let start = (qi(annulus) * s).ceil();
                    let g = (start - &half).max(Q::zero());
                    let g = g.to_integer().to_u32().expect("depth fits in u32");
                    key.push(annulus);
                    key.push(f.ancestor_at(nodes[j], g) as i64);
                }
                groups.entry(key).or_default().push(v);
            }
            (qi(18), 4)
        }
        MetricKind::CustomCube => unreachable!("custom complexes are not products"),
    };
    let mut members: Vec<Vec<CellId>> = groups.into_values().collect();
    members.sort();
    let cov = Covering {
        s: s.clone(),
        c_sq,
        multiplicity_bound: bound,
        members,
    };
    let report = verify_cover(x, &cov, &y)?;
    if !report.ok(&cov) {
        return Err(Error::verification(format!(
            "covering at scale {} fails its guarantees: {report:?}",
            q_to_string(s)
        )));
    }
    Ok(cov)
}

/// Squared model distance between vertices in units of the squared edge
/// length (product complexes).
fn units(x: &MetricComplex, u: CellId, v: CellId) -> u64 {
    x.product().expect("product complex").dist_sq_units(u, v)
}

/// Largest integer m with m * h^2 <= q (q >= 0), or the exact threshold test.
fn unit_threshold(x: &MetricComplex, q: &Q) -> u64 {
    let h = x.product().expect("product complex").edge_length();
    (q / (h * h)).floor().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Vertices of `owners` within `max_units` (squared edge lengths) of `v`, with
/// the distance. Scans the ball or the owned vertices, whichever is smaller.
pub(crate) fn near_owned<'o, T>(
    x: &MetricComplex,
    v: CellId,
    max_units: u64,
    owners: &'o HashMap<CellId, T>,
) -> Vec<(&'o T, u64)> {
    let p = x.product().expect("product complex");
    let side = (max_units as f64).sqrt() + 2.0;
    let ball_estimate = side.powi(p.num_factors() as i32);
    if (owners.len() as f64) < ball_estimate {
        owners
            .iter()
            .map(|(&u, t)| (t, p.dist_sq_units(u, v)))
            .filter(|&(_, d)| d <= max_units)
            .collect()
    } else {
        p.ball_vertices(v, max_units)
            .into_iter()
            .filter_map(|(u, d)| owners.get(&u).map(|t| (t, d)))
            .collect()
    }
}

/// Checks multiplicity, member diameters and coverage of `y`.
pub fn verify_cover(x: &MetricComplex, cov: &Covering, y: &[CellId]) -> Result<CoverReport> {
    if x.product().is_none() {
        return Err(Error::Unsupported("cover verification needs a grid or tree product".into()));
    }
    let ball = unit_threshold(x, &(&cov.s * &cov.s / qi(4)));
    let diam_cap = unit_threshold(x, &(&cov.c_sq * &cov.s * &cov.s));
    let mut covered: BTreeMap<CellId, usize> = BTreeMap::new();
    let mut max_diam_units = 0u64;
    for m in &cov.members {
        for (a, &u) in m.iter().enumerate() {
            *covered.entry(u).or_default() += 1;
            for &v in &m[a + 1..] {
                max_diam_units = max_diam_units.max(units(x, u, v));
            }
        }
    }
    let ys: BTreeSet<CellId> = y.iter().copied().collect();
    let covers_all = ys.iter().all(|v| covered.get(v) == Some(&1))
        && covered.keys().all(|v| ys.contains(v));
    let mut owners: HashMap<CellId, Vec<usize>> = HashMap::new();
    for (i, m) in cov.members.iter().enumerate() {
        for &v in m {
            owners.entry(v).or_default().push(i);
        }
    }
    let mut multiplicity = 0;
    for &v in &ys {
        let met: BTreeSet<usize> = near_owned(x, v, ball, &owners)
            .into_iter()
            .flat_map(|(o, _)| o.iter().copied())
            .collect();
        multiplicity = multiplicity.max(met.len());
    }
    let h = x.product().unwrap().edge_length();
    let max_diam = sqrt_f64(&(qi(max_diam_units as i64) * h * h));
    Ok(CoverReport {
        multiplicity,
        max_diam_ratio: max_diam / crate::numeric::to_f64(&cov.s),
        diam_ok: max_diam_units <= diam_cap,
        covers_all,
    })
}

#[cfg(test)]
mod tests;
