//! Multi-scale filling of cycles: scale ladders, the filling of round cycles,
//! the iteration over round decompositions, workload generators and the
//! exponent experiment.

pub mod calibrate;
pub mod constants;
pub mod experiment;
pub mod families;
pub mod ladder;

use serde::Serialize;

use crate::chains::Chain;
use crate::complex::MetricComplex;
use crate::deform::{pm_approximate_with, ApproxOptions};
use crate::error::{Error, Result};
use crate::fill::{
    check_cycle, euclidean_filling_with, fill_piecewise_minimizing, round_decompose, SimplexBuilder,
};
use crate::numeric::{powf, to_f64, Q};

pub use calibrate::{calibrate, CalibrationOptions};
pub use constants::Constants;
pub use experiment::{experiment_exponent, fit_loglog, ExperimentOptions, Fit, FillingReport, ReportRow};
pub use families::{Family, Instance};
pub use ladder::{power_above, ScaleLadder};

#[derive(Clone, Debug)]
pub struct FillConfig {
    pub delta: Q,
    /// Covering threshold scale; defaults to the largest path diameter of a cell.
    pub r0: Option<Q>,
    pub approx: ApproxOptions,
    pub max_iterations: usize,
    pub constants: Constants,
}

impl FillConfig {
    pub fn new(x: &MetricComplex, delta: Q) -> Self {
        FillConfig {
            delta,
            r0: None,
            approx: ApproxOptions::default(),
            max_iterations: 64,
            constants: Constants::for_complex(x),
        }
    }

    /// Masses at or below r0^(1/delta) are filled directly.
    pub fn small_mass_threshold(&self, x: &MetricComplex) -> f64 {
        let r0 = self.r0.as_ref().unwrap_or(x.max_cell_path_diam());
        powf(to_f64(r0), 1.0 / to_f64(&self.delta))
    }

    fn check_delta(&self, k: usize) -> Result<()> {
        let d = to_f64(&self.delta);
        if k >= 1 && !(d > 0.0 && d < 1.0 / k as f64) {
            return Err(Error::invalid(format!("delta {d} must lie in (0, 1/{k})")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FillMethod {
    Zero,
    Euclidean,
    Ladder,
}

impl FillMethod {
    pub fn tag(self) -> &'static str {
        match self {
            FillMethod::Zero => "zero",
            FillMethod::Euclidean => "euclidean",
            FillMethod::Ladder => "ladder",
        }
    }
}

/// One rung of the ladder: the cycles of the previous rung approximated at
/// scale s_n.
#[derive(Clone, Debug, Serialize)]
pub struct RungRecord {
    pub n: usize,
    pub s: f64,
    pub inputs: usize,
    pub l1: i64,
    pub p_mass: f64,
    pub p_fill_mass: f64,
    /// Largest M(Q) / (diam * mesh * |P|_1) of the piecewise fillings.
    pub piecewise_ratio: f64,
    pub remainders: usize,
    pub remainder_mass: f64,
    /// B^n M(R) with B from the constants.
    pub remainder_bound: f64,
    pub within_bound: bool,
    pub bridge_mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundFilling {
    #[serde(skip)]
    pub chain: Chain,
    pub mass_r: f64,
    pub mass: f64,
    pub method: FillMethod,
    pub ladder: Option<ScaleLadder>,
    pub rungs: Vec<RungRecord>,
    /// M(V) / M(R)^(1 + delta).
    pub ratio: f64,
}

fn supports_ladder(x: &MetricComplex, k: usize) -> bool {
    (1..=2).contains(&k) && x.product().is_some()
}

/// Fills a round cycle R. Below the small-mass threshold (or where the
/// approximation is unavailable) the Euclidean filling is used. Otherwise the
/// remainder cycles are approximated rung by rung along the scale ladder,
/// every piecewise minimizing cycle P is filled by completing its simplices
/// with its least vertex, and the cycles left after the last rung are coned.
pub fn fill_round(x: &MetricComplex, r: &Chain, cfg: &FillConfig) -> Result<RoundFilling> {
    check_cycle(x, r)?;
    let k = r.dim();
    cfg.check_delta(k)?;
    let mass = r.mass(x);
    let mass_r = to_f64(&mass);
    let d = to_f64(&cfg.delta);
    let finish = |chain: Chain, method, ladder, rungs| -> Result<RoundFilling> {
        if chain.boundary(x) != *r {
            return Err(Error::verification("round filling does not bound the cycle"));
        }
        let m = chain.mass_f64(x);
        Ok(RoundFilling {
            mass_r,
            mass: m,
            ratio: if mass_r > 0.0 { m / powf(mass_r, 1.0 + d) } else { 0.0 },
            chain,
            method,
            ladder,
            rungs,
        })
    };
    if r.is_zero() {
        return finish(Chain::zero(k + 1), FillMethod::Zero, None, Vec::new());
    }
    if !supports_ladder(x, k) || mass_r <= cfg.small_mass_threshold(x) || mass_r <= 1.0 {
        let e = euclidean_filling_with(x, r, &cfg.constants.round)?;
        return finish(e.chain, FillMethod::Euclidean, None, Vec::new());
    }
    let ladder = ScaleLadder::new(&mass, k, &cfg.delta)?;
    let mut builder = SimplexBuilder::new(x, cfg.approx.fill.clone());
    let mut v = Chain::zero(k + 1);
    let mut p_total = Chain::zero(k);
    let mut zs = vec![r.clone()];
    let mut rungs = Vec::new();
    let l = ladder.len();
    for n in 1..=l {
        let s = &ladder.scales[n];
        let last = n == l;
        let mut rec = RungRecord {
            n,
            s: to_f64(s),
            inputs: zs.len(),
            l1: 0,
            p_mass: 0.0,
            p_fill_mass: 0.0,
            piecewise_ratio: 0.0,
            remainders: 0,
            remainder_mass: 0.0,
            remainder_bound: powf(cfg.constants.b_meas, n as f64) * mass_r,
            within_bound: true,
            bridge_mass: 0.0,
        };
        let mut next = Vec::new();
        for z in &zs {
            let res = pm_approximate_with(&mut builder, z, s)?;
            p_total += &res.p;
            rec.l1 += res.pieces.l1();
            rec.p_mass += res.p.mass_f64(x);
            if !res.pieces.is_zero() {
                let apex = res.pieces.vertex_set()[0];
                let pf = fill_piecewise_minimizing(&mut builder, &res.pieces, apex)?;
                if pf.chain.boundary(x) != res.p {
                    return Err(Error::verification("piecewise filling does not bound the approximation"));
                }
                rec.p_fill_mass += pf.mass;
                rec.piecewise_ratio = rec.piecewise_ratio.max(pf.ratio);
                v += &pf.chain;
            }
            if last {
                rec.bridge_mass += res.bridge.mass_f64(x);
                v += &res.bridge;
            }
            next.extend(res.remainders.into_iter().map(|rem| rem.chain).filter(|c| !c.is_zero()));
        }
        let mut sum = p_total.clone();
        for z in &next {
            sum += z;
        }
        if sum != *r {
            return Err(Error::verification(format!("rung {n}: pieces and remainders do not sum to the cycle")));
        }
        rec.remainders = next.len();
        rec.remainder_mass = next.iter().map(|z| z.mass_f64(x)).sum();
        rec.within_bound = rec.remainder_mass <= rec.remainder_bound * (1.0 + 1e-12);
        log::debug!("rung {n}: {rec:?}");
        rungs.push(rec);
        zs = next;
    }
    finish(v, FillMethod::Ladder, Some(ladder), rungs)
}

/// One step of the weighted ledger C' M(T')^(1+delta) + mu^(1+delta) M(V') <= C' M(T)^(1+delta).
#[derive(Clone, Debug, Serialize)]
pub struct LedgerRow {
    pub iteration: usize,
    pub mass_t: f64,
    pub mass_residual: f64,
    pub pieces: usize,
    pub mass_v: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The closing Euclidean step.
    pub closing: bool,
    pub methods: Vec<FillMethod>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleFilling {
    #[serde(skip)]
    pub chain: Chain,
    pub mass_t: f64,
    pub mass: f64,
    pub ledger: Vec<LedgerRow>,
    pub rounds: Vec<RoundFilling>,
    /// M(V) / M(T)^(1 + delta).
    pub ratio: f64,
}

impl CycleFilling {
    pub fn ledger_violations(&self) -> usize {
        self.ledger.iter().filter(|r| !r.holds).count()
    }

    /// Distinct method tags of the sub-fillings, joined by '+'.
    pub fn method_tag(&self) -> String {
        let mut tags: Vec<&str> = self
            .ledger
            .iter()
            .flat_map(|r| r.methods.iter().map(|m| m.tag()))
            .collect();
        tags.sort();
        tags.dedup();
        if tags.is_empty() {
            "zero".into()
        } else {
            tags.join("+")
        }
    }
}

/// Fills an arbitrary cycle: repeatedly splits off round pieces, fills them
/// with [`fill_round`] and continues with the residual, closing with the
/// Euclidean filling once the residual is below the small-mass threshold.
pub fn fill_cycle(x: &MetricComplex, t: &Chain, cfg: &FillConfig) -> Result<CycleFilling> {
    check_cycle(x, t)?;
    let k = t.dim();
    cfg.check_delta(k)?;
    let d = to_f64(&cfg.delta);
    let c = &cfg.constants;
    let weight = powf(c.mu, 1.0 + d);
    let threshold = cfg.small_mass_threshold(x);
    let mut v = Chain::zero(k + 1);
    let mut rest = t.clone();
    let mut ledger = Vec::new();
    let mut rounds = Vec::new();
    let row = |iteration, mass_t: f64, mass_residual: f64, pieces, mass_v: f64, closing, methods| {
        let lhs = c.c_prime * powf(mass_residual, 1.0 + d) + weight * mass_v;
        let rhs = c.c_prime * powf(mass_t, 1.0 + d);
        LedgerRow {
            iteration,
            mass_t,
            mass_residual,
            pieces,
            mass_v,
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + 1e-12),
            closing,
            methods,
        }
    };
    let mut iteration = 0;
    while !rest.is_zero() {
        if iteration == cfg.max_iterations {
            log::warn!("fill_cycle stopped with ledger {ledger:?}");
            return Err(Error::Budget {
                what: "filling iterations",
                requested: iteration as u64 + 1,
                budget: cfg.max_iterations as u64,
            });
        }
        let m = rest.mass_f64(x);
        let small = k == 0 || m <= threshold || !supports_ladder(x, k);
        let dec = if small { None } else { Some(round_decompose(x, &rest, &c.round)?) };
        match dec {
            Some(dec) if !dec.pieces.is_empty() => {
                let mut vi = Chain::zero(k + 1);
                let mut methods = Vec::new();
                for r in &dec.pieces {
                    let f = fill_round(x, r, cfg)?;
                    vi += &f.chain;
                    methods.push(f.method);
                    rounds.push(f);
                }
                ledger.push(row(
                    iteration,
                    m,
                    dec.residual.mass_f64(x),
                    dec.pieces.len(),
                    vi.mass_f64(x),
                    false,
                    methods,
                ));
                v += &vi;
                rest = dec.residual;
            }
            _ => {
                let e = euclidean_filling_with(x, &rest, &c.round)?;
                ledger.push(row(iteration, m, 0.0, 1, e.chain.mass_f64(x), true, vec![FillMethod::Euclidean]));
                v += &e.chain;
                rest = Chain::zero(k);
            }
        }
        iteration += 1;
    }
    if v.boundary(x) != *t {
        return Err(Error::verification("cycle filling does not bound the cycle"));
    }
    let mass_t = t.mass_f64(x);
    let mass = v.mass_f64(x);
    Ok(CycleFilling {
        chain: v,
        mass_t,
        mass,
        ledger,
        rounds,
        ratio: if mass_t > 0.0 { mass / powf(mass_t, 1.0 + d) } else { 0.0 },
    })
}

#[cfg(test)]
mod tests;
