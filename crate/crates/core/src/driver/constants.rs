//! Measured constants per complex family, bundled as JSON and regenerated by
//! the calibration run.

use serde::{Deserialize, Serialize};

use crate::complex::{MetricComplex, MetricKind};
use crate::error::Result;
use crate::fill::RoundParams;

/// Upper bounds measured on a calibration workload, multiplied by `safety`.
/// A value of zero means the quantity was not exercised by the workload.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    pub family: String,
    /// Cone filling mass / (radius * M(T)).
    pub kappa_cone: f64,
    /// Slice bound used by the round decomposition trigger.
    pub kappa_slice: f64,
    /// Minimizing triangle mass / (largest edge length)^2.
    pub c2: f64,
    /// Euclidean filling mass / M(T)^(1 + 1/k) for k = 1 and k = 2.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Piecewise filling mass / (diam * mesh * |P|_1).
    pub c_piecewise: f64,
    /// Sum M(R_i) / M(T) over displacement pieces.
    pub a_meas: f64,
    /// Largest of the scale-relative clauses of the approximation.
    pub b_meas: f64,
    pub l1_meas: f64,
    pub mesh_meas: f64,
    pub remainder_diam_meas: f64,
    pub remainder_mass_meas: f64,
    pub bridge_meas: f64,
    /// Largest displacement d(v, f(v)) / s.
    pub l_meas: f64,
    pub round: RoundParams,
    /// Weight of the residual term in the filling ledger.
    pub c_prime: f64,
    /// eps / (1 + lambda).
    pub mu: f64,
    pub safety: f64,
    /// Number of calibration samples behind the values.
    pub samples: usize,
}

impl Default for Constants {
    fn default() -> Self {
        let round = RoundParams::default();
        Constants {
            family: "default".into(),
            kappa_cone: 2.0,
            kappa_slice: round.kappa_slice,
            c2: 0.5,
            gamma1: 1.0,
            gamma2: 1.0,
            c_piecewise: 1.0,
            a_meas: 4.0,
            b_meas: 4.0,
            l1_meas: 4.0,
            mesh_meas: 4.0,
            remainder_diam_meas: 4.0,
            remainder_mass_meas: 4.0,
            bridge_meas: 4.0,
            l_meas: 2.0,
            mu: round.eps / (1.0 + round.lambda),
            round,
            c_prime: 1.0,
            safety: 1.25,
            samples: 0,
        }
    }
}

const GRID2: &str = include_str!("../../constants/grid2.json");
const GRID3: &str = include_str!("../../constants/grid3.json");
const TREEPROD: &str = include_str!("../../constants/treeprod.json");

impl Constants {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constants serialise")
    }

    /// Bundled constants for a family name: grid2, grid3 or treeprod.
    pub fn bundled(family: &str) -> Option<Self> {
        let text = match family {
            "grid2" => GRID2,
            "grid3" => GRID3,
            "treeprod" => TREEPROD,
            _ => return None,
        };
        Some(Self::from_json(text).expect("bundled constants parse"))
    }

    /// Family name of a complex; grids of dimension 4 and custom complexes
    /// share the grid3 constants.
    pub fn family_of(x: &MetricComplex) -> &'static str {
        match x.kind() {
            MetricKind::Grid { n: 2, .. } => "grid2",
            MetricKind::TreeProduct { .. } => "treeprod",
            _ => "grid3",
        }
    }

    pub fn for_complex(x: &MetricComplex) -> Self {
        Self::bundled(Self::family_of(x)).unwrap_or_default()
    }

    pub fn gamma(&self, k: usize) -> f64 {
        if k <= 1 {
            self.gamma1
        } else {
            self.gamma2
        }
    }
}
