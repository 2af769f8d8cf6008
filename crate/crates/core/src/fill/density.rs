//! Normalised mass densities of chains in metric balls.

use num_traits::Zero;
use serde::Serialize;

use crate::chains::Chain;
use crate::complex::{CellId, MetricComplex, Point};
use crate::error::{Error, Result};
use crate::numeric::{qi, qr, to_f64, Q};

#[derive(Clone, Debug, Serialize)]
pub struct DensityProfile {
    pub radii: Vec<f64>,
    /// ||V||(B(x, r)) / r^dim(V) for each radius.
    pub ratios: Vec<f64>,
    /// Indices i (among radii at least two cell diameters) where the ratio
    /// drops below the previous eligible ratio.
    pub violations: Vec<usize>,
}

impl DensityProfile {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Barycentre of a cell: all local coordinates 1/2.
fn barycentre(x: &MetricComplex, c: CellId) -> Point {
    Point {
        cell: c,
        coords: vec![qr(1, 2); x.dim(c)],
    }
}

/// ||V|| restricted to the closed ball counts each cell whose barycentre lies in
/// the ball. Distances are exact for grids and tree products; custom complexes
/// use the path-metric upper bound.
pub fn density_profile(x: &MetricComplex, v: &Chain, centre: CellId, radii: &[Q]) -> Result<DensityProfile> {
    if !x.contains(centre) || x.dim(centre) != 0 {
        return Err(Error::invalid(format!("{centre} is not a vertex")));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii.first().is_some_and(|r| r <= &Q::zero()) {
        return Err(Error::invalid("radii must be positive and increasing"));
    }
    let centre = Point::vertex(centre);
    let mut cells: Vec<(Q, Q)> = Vec::with_capacity(v.len());
    for (c, k) in v.iter() {
        let d = x.distance(&centre, &barycentre(x, c))?;
        let sq = d.exact_sq.unwrap_or_else(|| Q::from_float(d.upper * d.upper).unwrap_or_default());
        cells.push((sq, qi(k.abs()) * x.volume(c)));
    }
    cells.sort();
    let dim = v.dim() as i32;
    let floor = 2.0 * to_f64(x.max_cell_path_diam());
    let mut ratios = Vec::with_capacity(radii.len());
    let mut acc = Q::zero();
    let mut i = 0;
    for r in radii {
        let r2 = r * r;
        while i < cells.len() && cells[i].0 <= r2 {
            acc += &cells[i].1;
            i += 1;
        }
        ratios.push(to_f64(&acc) / to_f64(r).powi(dim));
    }
    let mut violations = Vec::new();
    let mut prev: Option<f64> = None;
    for (j, r) in radii.iter().enumerate() {
        if to_f64(r) < floor {
            continue;
        }
        if let Some(p) = prev {
            if ratios[j] < p - 1e-12 {
                violations.push(j);
            }
        }
        prev = Some(ratios[j]);
    }
    Ok(DensityProfile {
        radii: radii.iter().map(to_f64).collect(),
        ratios,
        violations,
    })
}
