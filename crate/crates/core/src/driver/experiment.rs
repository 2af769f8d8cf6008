//! The exponent experiment: fill every cycle of a family, optionally solve the
//! exact minimal filling, and fit log Fill against log M.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fill::{hull_cells, min_filling, MinFillOptions};
use crate::numeric::{to_f64, Q};

use super::families::{Family, Instance};
use super::{fill_cycle, Constants, FillConfig};

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub k: usize,
    pub mass_t: f64,
    pub fill_mass: f64,
    pub method: String,
    pub delta: f64,
    pub runtime_ms: u128,
}

/// Least-squares line ln y = slope ln x + intercept.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits ln y against ln x over the points with x, y > 0; None with fewer than
/// two distinct abscissae.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<Fit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(Fit {
        slope,
        intercept: my - slope * mx,
        r2: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) },
        points: pts.len(),
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub delta: Q,
    /// Run the multi-scale filling.
    pub fill_cycle: bool,
    /// Run the exact minimal filling when the hull has at most this many
    /// candidate cells (0 disables the oracle).
    pub oracle_max_cells: usize,
    pub constants: Option<Constants>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            delta: Q::new(1.into(), 4.into()),
            fill_cycle: true,
            oracle_max_cells: 20_000,
            constants: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FillingReport {
    pub family: String,
    pub rows: Vec<ReportRow>,
    /// Fit per method: "fill_cycle" and "min_filling".
    pub fits: Vec<(String, Fit)>,
    pub skipped: Vec<String>,
    /// Instances whose filling failed or did not verify.
    pub failures: Vec<String>,
    pub ledger_violations: usize,
}

impl FillingReport {
    pub fn fit(&self, method: &str) -> Option<&Fit> {
        self.fits.iter().find(|(m, _)| m == method).map(|(_, f)| f)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance_id,k,mass_T,fill_mass,method,delta,runtime_ms\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.instance_id, r.k, r.mass_t, r.fill_mass, r.method, r.delta, r.runtime_ms
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "family={} rows={} skipped={} failures={} ledger_violations={}\n",
            self.family,
            self.rows.len(),
            self.skipped.len(),
            self.failures.len(),
            self.ledger_violations
        );
        for (m, f) in &self.fits {
            out.push_str(&format!(
                "fit method={m} slope={:.6} intercept={:.6} r2={:.6} points={}\n",
                f.slope, f.intercept, f.r2, f.points
            ));
        }
        for f in &self.failures {
            out.push_str(&format!("failure {f}\n"));
        }
        out
    }
}

fn oracle_size(inst: &Instance) -> usize {
    let x = &inst.complex;
    if x.product().is_none() {
        return x.count_of_dim(inst.k() + 1);
    }
    hull_cells(x, &inst.cycle.support_vertices(x), inst.k() + 1).len()
}

/// Outcome of one instance: report rows, failures and ledger violations.
type Outcome = (Vec<ReportRow>, Vec<String>, usize);

fn run_instance(inst: &Instance, opts: &ExperimentOptions) -> Outcome {
    let x = &inst.complex;
    let delta = to_f64(&opts.delta);
    let mass_t = inst.cycle.mass_f64(x);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut violations = 0;
    if opts.fill_cycle {
        let mut cfg = FillConfig::new(x, opts.delta.clone());
        if let Some(c) = &opts.constants {
            cfg.constants = c.clone();
        }
        let start = Instant::now();
        match fill_cycle(x, &inst.cycle, &cfg) {
            Ok(f) if f.chain.boundary(x) == inst.cycle => {
                violations += f.ledger_violations();
                rows.push(ReportRow {
                    instance_id: inst.id.clone(),
                    k: inst.k(),
                    mass_t,
                    fill_mass: f.mass,
                    method: format!("fill_cycle:{}", f.method_tag()),
                    delta,
                    runtime_ms: start.elapsed().as_millis(),
                });
            }
            Ok(_) => failures.push(format!("{}: fill_cycle result does not bound", inst.id)),
            Err(e) => failures.push(format!("{}: fill_cycle: {e}", inst.id)),
        }
    }
    if opts.oracle_max_cells > 0 && oracle_size(inst) <= opts.oracle_max_cells {
        let start = Instant::now();
        match min_filling(x, &inst.cycle, &MinFillOptions::default()) {
            Ok(m) if m.chain.boundary(x) == inst.cycle => {
                if let Some(cf) = &inst.closed_form_fill {
                    if &m.mass != cf {
                        failures.push(format!("{}: minimal filling {} differs from closed form {cf}", inst.id, m.mass));
                    }
                }
                rows.push(ReportRow {
                    instance_id: inst.id.clone(),
                    k: inst.k(),
                    mass_t,
                    fill_mass: to_f64(&m.mass),
                    method: "min_filling".into(),
                    delta,
                    runtime_ms: start.elapsed().as_millis(),
                });
            }
            Ok(_) => failures.push(format!("{}: minimal filling does not bound", inst.id)),
            Err(e) => failures.push(format!("{}: min_filling: {e}", inst.id)),
        }
    }
    (rows, failures, violations)
}

/// Runs the family: instances in parallel, rows appended in instance order.
pub fn experiment_exponent(family: &Family, opts: &ExperimentOptions) -> Result<FillingReport> {
    let (instances, skipped) = family.generate()?;
    if instances.is_empty() {
        return Err(Error::invalid("no instances"));
    }
    let outcomes: Vec<Outcome> = instances.par_iter().map(|inst| run_instance(inst, opts)).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut ledger_violations = 0;
    for (r, f, v) in outcomes {
        rows.extend(r);
        failures.extend(f);
        ledger_violations += v;
    }
    let mut fits = Vec::new();
    for method in ["fill_cycle", "min_filling"] {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.method.split(':').next() == Some(method))
            .map(|r| (r.mass_t, r.fill_mass))
            .collect();
        if let Some(f) = fit_loglog(&pts) {
            fits.push((method.to_string(), f));
        }
    }
    Ok(FillingReport {
        family: family.name().into(),
        rows,
        fits,
        skipped,
        failures,
        ledger_violations,
    })
}
