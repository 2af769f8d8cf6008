//! Calibration: measure the constants of a complex family on a random
//! workload and scale them by a safety factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{CellId, MetricComplex};
use crate::deform::{pm_approximate, ApproxOptions};
use crate::error::Result;
use crate::fill::{cone_filling, euclidean_filling_with, minimizing_simplex, MinFillOptions};
use crate::numeric::{powf, to_f64, Q};

use super::families::random_cycle;
use super::{fill_cycle, Constants, FillConfig, ScaleLadder};

#[derive(Clone, Debug)]
pub struct CalibrationOptions {
    pub samples: usize,
    pub seed: u64,
    pub delta: Q,
    pub safety: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            samples: 24,
            seed: 0x5eed,
            delta: Q::new(1.into(), 4.into()),
            safety: 1.25,
        }
    }
}

fn raise(slot: &mut f64, v: f64) {
    if v.is_finite() && v > *slot {
        *slot = v;
    }
}

/// Measures the constants on `samples` random cycles of `x`: cone and
/// Euclidean filling ratios, minimizing triangle areas, the clauses of the
/// approximation at the ladder scale and at the bottom scale, the piecewise
/// filling ratio and the ledger weight C' needed by the cycle filling.
pub fn calibrate(x: &MetricComplex, opts: &CalibrationOptions) -> Result<Constants> {
    let base = Constants::default();
    let mut m = Constants {
        family: Constants::family_of(x).into(),
        kappa_cone: 0.0,
        c2: 0.0,
        gamma1: 0.0,
        gamma2: 0.0,
        c_piecewise: 0.0,
        a_meas: 0.0,
        b_meas: 0.0,
        l1_meas: 0.0,
        mesh_meas: 0.0,
        remainder_diam_meas: 0.0,
        remainder_mass_meas: 0.0,
        bridge_meas: 0.0,
        l_meas: 0.0,
        c_prime: 0.0,
        safety: opts.safety,
        samples: opts.samples,
        ..base.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let d = to_f64(&opts.delta);
    let approx = ApproxOptions::default();
    let mut cfg = FillConfig::new(x, opts.delta.clone());
    cfg.constants = base;
    for _ in 0..opts.samples {
        let t = random_cycle(x, &mut rng)?;
        let k = t.dim();
        let verts = t.support_vertices(x);
        raise(&mut m.kappa_cone, cone_filling(x, &t, verts[0])?.ratio);
        let e = euclidean_filling_with(x, &t, &m.round)?;
        if k <= 1 {
            raise(&mut m.gamma1, e.ratio);
        } else {
            raise(&mut m.gamma2, e.ratio);
        }
        if x.max_dim() >= 2 && verts.len() >= 3 {
            let tri: Vec<CellId> = (0..3).map(|_| verts[rng.gen_range(0..verts.len())]).collect();
            let ms = minimizing_simplex(x, &tri, &MinFillOptions::default())?;
            let edge = (0..3)
                .map(|i| x.vertex_dist(tri[i], tri[(i + 1) % 3]))
                .fold(0.0, f64::max);
            if ms.minimizing && edge > 0.0 {
                raise(&mut m.c2, to_f64(&ms.mass) / (edge * edge));
            }
        }
        if !(1..=2).contains(&k) || x.product().is_none() {
            continue;
        }
        let mass = t.mass(x);
        let diam = x.max_cell_path_diam().clone();
        let mut scales = vec![diam.clone(), &diam * Q::from_integer(2.into())];
        if let Ok(l) = ScaleLadder::new(&mass, k, &opts.delta) {
            scales.push(l.scales[1].clone());
        }
        for s in &scales {
            let r = pm_approximate(x, &t, s, &approx)?;
            let c = &r.constants;
            raise(&mut m.a_meas, c.displacement_ratio);
            raise(&mut m.l1_meas, c.l1_ratio);
            raise(&mut m.mesh_meas, c.mesh_ratio);
            raise(&mut m.remainder_diam_meas, c.remainder_diam_ratio);
            raise(&mut m.remainder_mass_meas, c.remainder_mass_ratio);
            raise(&mut m.bridge_meas, c.bridge_ratio);
            raise(&mut m.l_meas, c.displacement);
        }
        let f = fill_cycle(x, &t, &cfg)?;
        for rf in &f.rounds {
            for rung in &rf.rungs {
                raise(&mut m.c_piecewise, rung.piecewise_ratio);
            }
        }
        let weight = powf(m.mu, 1.0 + d);
        for row in &f.ledger {
            let gap = powf(row.mass_t, 1.0 + d) - powf(row.mass_residual, 1.0 + d);
            if gap > 0.0 {
                raise(&mut m.c_prime, weight * row.mass_v / gap);
            } else {
                log::warn!("calibration: ledger step without mass decrease {row:?}");
            }
        }
    }
    let s = opts.safety;
    for v in [
        &mut m.kappa_cone,
        &mut m.c2,
        &mut m.gamma1,
        &mut m.gamma2,
        &mut m.c_piecewise,
        &mut m.a_meas,
        &mut m.l1_meas,
        &mut m.mesh_meas,
        &mut m.remainder_diam_meas,
        &mut m.remainder_mass_meas,
        &mut m.bridge_meas,
        &mut m.l_meas,
        &mut m.c_prime,
    ] {
        *v *= s;
    }
    m.b_meas = [
        m.l1_meas,
        m.mesh_meas,
        m.remainder_diam_meas,
        m.remainder_mass_meas,
        m.bridge_meas,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(m)
}
