//! Cycle families for experiments and calibration.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chains::Chain;
use crate::complex::{CellId, FactorCell, MetricComplex, MetricKind};
use crate::error::{Error, Result};
use crate::numeric::{parse_q, q_pow, qi, Q};

/// Parses `grid:n,extent,h`, `treeprod:a,b,depth` or the path of a custom
/// complex JSON file.
pub fn parse_space(spec: &str) -> Result<MetricComplex> {
    let nums = |body: &str| -> Result<Vec<String>> {
        let parts: Vec<String> = body.split(',').map(|p| p.trim().to_string()).collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("space `{spec}` needs three parameters")));
        }
        Ok(parts)
    };
    let int = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::invalid(format!("space `{spec}`: `{s}` is not a count")))
    };
    if let Some(body) = spec.strip_prefix("grid:") {
        let p = nums(body)?;
        MetricComplex::build_grid(int(&p[0])?, int(&p[1])?, parse_q(&p[2])?)
    } else if let Some(body) = spec.strip_prefix("treeprod:") {
        let p = nums(body)?;
        MetricComplex::build_tree_product(int(&p[0])?, int(&p[1])?, int(&p[2])?)
    } else {
        MetricComplex::from_custom_json(&std::fs::read_to_string(spec)?)
    }
}

/// Sum of the top cells of a grid in the box [lo, hi) (node coordinates).
pub fn box_chain(x: &MetricComplex, lo: &[u32], hi: &[u32]) -> Result<Chain> {
    let p = x
        .product()
        .filter(|p| p.factors().iter().all(|f| f.is_path()))
        .ok_or_else(|| Error::invalid("boxes need a grid"))?;
    let n = p.num_factors();
    if lo.len() != n || hi.len() != n {
        return Err(Error::invalid(format!("box corners need {n} coordinates")));
    }
    for j in 0..n {
        if lo[j] >= hi[j] || hi[j] as usize >= p.factors()[j].num_nodes() {
            return Err(Error::invalid(format!("box [{lo:?}, {hi:?}) does not fit the grid")));
        }
    }
    let mut terms = Vec::new();
    let mut cur: Vec<u32> = lo.to_vec();
    'outer: loop {
        let cells: Vec<FactorCell> = cur.iter().map(|&i| FactorCell::Edge(i + 1)).collect();
        terms.push((p.encode(&cells), 1));
        for j in (0..n).rev() {
            cur[j] += 1;
            if cur[j] < hi[j] {
                continue 'outer;
            }
            cur[j] = lo[j];
        }
        break;
    }
    Ok(Chain::from_terms(n, terms))
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub complex: Arc<MetricComplex>,
    pub cycle: Chain,
    /// Exact least filling mass when known in closed form.
    pub closed_form_fill: Option<Q>,
}

impl Instance {
    pub fn k(&self) -> usize {
        self.cycle.dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// Boundaries of m x m x m blocks in grid(3).
    Grid3Spheres { m_min: u32, m_max: u32 },
    /// Boundaries of m x m squares in grid(2).
    Grid2Loops { m_min: u32, m_max: u32 },
    /// Random geodesic polygons in tree_product(3, 3, depth).
    TreeprodCycles { depth: usize, count: usize, seed: u64 },
    /// Boundaries of random signed sums of boxes in grid(3).
    Grid3Mixed { extent: u32, count: usize, seed: u64 },
    /// Cycles listed in a JSON file next to their space.
    Custom { path: String },
}

fn params(text: &str) -> Result<Vec<(String, String)>> {
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| Error::invalid(format!("parameter `{p}` is not key=value")))
        })
        .collect()
}

fn get<T: std::str::FromStr>(ps: &[(String, String)], key: &str, default: T) -> Result<T> {
    match ps.iter().find(|(k, _)| k == key) {
        None => Ok(default),
        Some((_, v)) => v
            .parse()
            .map_err(|_| Error::invalid(format!("parameter {key}=`{v}` does not parse"))),
    }
}

fn range(ps: &[(String, String)], key: &str, default: (u32, u32)) -> Result<(u32, u32)> {
    match ps.iter().find(|(k, _)| k == key) {
        None => Ok(default),
        Some((_, v)) => {
            let (a, b) = v.split_once("..").unwrap_or((v, v));
            let parse = |s: &str| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::invalid(format!("range {key}=`{v}` does not parse")))
            };
            Ok((parse(a)?, parse(b)?))
        }
    }
}

impl Family {
    /// Parses a family name and its `key=value,...` parameters, e.g.
    /// `grid3_spheres` with `m=2..12` or `treeprod_cycles` with
    /// `depth=6,count=40,seed=1`.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let ps = params(text)?;
        Ok(match name {
            "grid3_spheres" => {
                let (m_min, m_max) = range(&ps, "m", (2, 12))?;
                Family::Grid3Spheres { m_min, m_max }
            }
            "grid2_loops" => {
                let (m_min, m_max) = range(&ps, "m", (2, 24))?;
                Family::Grid2Loops { m_min, m_max }
            }
            "treeprod_cycles" => Family::TreeprodCycles {
                depth: get(&ps, "depth", 6)?,
                count: get(&ps, "count", 40)?,
                seed: get(&ps, "seed", 1)?,
            },
            "grid3_mixed" => Family::Grid3Mixed {
                extent: get(&ps, "extent", 12)?,
                count: get(&ps, "count", 30)?,
                seed: get(&ps, "seed", 1)?,
            },
            "custom" => Family::Custom {
                path: get(&ps, "file", String::new())?,
            },
            _ => return Err(Error::invalid(format!("unknown family `{name}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Grid3Spheres { .. } => "grid3_spheres",
            Family::Grid2Loops { .. } => "grid2_loops",
            Family::TreeprodCycles { .. } => "treeprod_cycles",
            Family::Grid3Mixed { .. } => "grid3_mixed",
            Family::Custom { .. } => "custom",
        }
    }

    /// Generates the instances; failures are logged and returned as skip
    /// messages.
    pub fn generate(&self) -> Result<(Vec<Instance>, Vec<String>)> {
        let mut out = Vec::new();
        let mut skipped = Vec::new();
        match *self {
            Family::Grid3Spheres { m_min, m_max } | Family::Grid2Loops { m_min, m_max } => {
                let n = if matches!(self, Family::Grid3Spheres { .. }) { 3 } else { 2 };
                if m_min > m_max || m_min == 0 {
                    return Ok((out, skipped));
                }
                let x = Arc::new(MetricComplex::build_grid(n, m_max as usize + 2, qi(1))?);
                for m in m_min..=m_max {
                    let lo = vec![1; n];
                    let hi = vec![1 + m; n];
                    match box_chain(&x, &lo, &hi) {
                        Ok(b) => out.push(Instance {
                            id: format!("{}-m{m}", self.name()),
                            cycle: b.boundary(&x),
                            complex: x.clone(),
                            closed_form_fill: Some(q_pow(&qi(m as i64), n as u32)),
                        }),
                        Err(e) => skipped.push(format!("m={m}: {e}")),
                    }
                }
            }
            Family::TreeprodCycles { depth, count, seed } => {
                let x = Arc::new(MetricComplex::build_tree_product(3, 3, depth)?);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in 0..count {
                    match tree_polygon(&x, depth, &mut rng) {
                        Ok(c) if !c.is_zero() => out.push(Instance {
                            id: format!("treeprod-{seed}-{i}"),
                            complex: x.clone(),
                            cycle: c,
                            closed_form_fill: None,
                        }),
                        Ok(_) => skipped.push(format!("instance {i}: polygon is the zero cycle")),
                        Err(e) => skipped.push(format!("instance {i}: {e}")),
                    }
                }
            }
            Family::Grid3Mixed { extent, count, seed } => {
                let x = Arc::new(MetricComplex::build_grid(3, extent as usize, qi(1))?);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in 0..count {
                    match mixed_boxes(&x, extent, &mut rng) {
                        Ok(c) if !c.is_zero() => out.push(Instance {
                            id: format!("grid3mixed-{seed}-{i}"),
                            complex: x.clone(),
                            cycle: c,
                            closed_form_fill: None,
                        }),
                        Ok(_) => skipped.push(format!("instance {i}: boxes cancel")),
                        Err(e) => skipped.push(format!("instance {i}: {e}")),
                    }
                }
            }
            Family::Custom { ref path } => {
                let text = std::fs::read_to_string(path)?;
                let v: serde_json::Value = serde_json::from_str(&text)?;
                let x = Arc::new(match &v["space"] {
                    serde_json::Value::String(s) => parse_space(s)?,
                    obj @ serde_json::Value::Object(_) => MetricComplex::from_custom_json(&obj.to_string())?,
                    _ => return Err(Error::invalid("custom family needs a `space` entry")),
                });
                let cycles = v["cycles"].as_array().cloned().unwrap_or_default();
                for (i, c) in cycles.iter().enumerate() {
                    match Chain::from_json(&x, &c.to_string()) {
                        Ok(c) if c.is_zero() => skipped.push(format!("cycle {i}: zero")),
                        Ok(c) => out.push(Instance {
                            id: format!("custom-{i}"),
                            complex: x.clone(),
                            cycle: c,
                            closed_form_fill: None,
                        }),
                        Err(e) => skipped.push(format!("cycle {i}: {e}")),
                    }
                }
            }
        }
        for s in &skipped {
            log::warn!("{}: skipped {s}", self.name());
        }
        Ok((out, skipped))
    }
}

/// A random non-zero cycle of codimension one in the top dimension: box sums
/// in grids, geodesic polygons in tree products, sums of top cells otherwise.
pub fn random_cycle(x: &MetricComplex, rng: &mut ChaCha8Rng) -> Result<Chain> {
    for _ in 0..64 {
        let c = match x.kind() {
            MetricKind::Grid { extent, .. } => mixed_boxes(x, *extent as u32, rng)?,
            MetricKind::TreeProduct { depth, .. } => tree_polygon(x, *depth, rng)?,
            MetricKind::CustomCube => {
                let top: Vec<CellId> = x.cells_of_dim(x.max_dim()).collect();
                let mut body = Chain::zero(x.max_dim());
                for _ in 0..rng.gen_range(1..=4) {
                    body.add_term(top[rng.gen_range(0..top.len())], 1);
                }
                body.boundary(x)
            }
        };
        if !c.is_zero() {
            return Ok(c);
        }
    }
    Err(Error::invalid("could not draw a non-zero cycle"))
}

/// Closed geodesic polygon through 3 to 12 vertices drawn within a random
/// radius (log-uniform up to twice the depth) of a random centre.
fn tree_polygon(x: &MetricComplex, depth: usize, rng: &mut ChaCha8Rng) -> Result<Chain> {
    let p = x.product().expect("tree product");
    let max_r = (2 * depth).max(1) as f64;
    let r = max_r.powf(rng.gen::<f64>()).round().max(1.0) as u32;
    let centre: Vec<u32> = p
        .factors()
        .iter()
        .map(|f| rng.gen_range(0..f.num_nodes() as u32))
        .collect();
    let balls: Vec<Vec<u32>> = p
        .factors()
        .iter()
        .zip(&centre)
        .map(|(f, &c)| f.ball(c, r).into_iter().map(|(u, _)| u).collect())
        .collect();
    let n = rng.gen_range(3..=12);
    let verts: Vec<CellId> = (0..n)
        .map(|_| {
            let nodes: Vec<u32> = balls.iter().map(|b| b[rng.gen_range(0..b.len())]).collect();
            p.vertex(&nodes)
        })
        .collect();
    let mut t = Chain::zero(1);
    for i in 0..n {
        t += &x.geodesic_path(verts[i], verts[(i + 1) % n])?;
    }
    Ok(t)
}

/// Boundary of a sum of one to three boxes with random signs and sides.
fn mixed_boxes(x: &MetricComplex, extent: u32, rng: &mut ChaCha8Rng) -> Result<Chain> {
    let n = x.product().map_or(0, |p| p.num_factors());
    let side_max = (extent / 3).max(1);
    let mut body = Chain::zero(n);
    for _ in 0..rng.gen_range(1..=3) {
        let side: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=side_max)).collect();
        let lo: Vec<u32> = side.iter().map(|&s| rng.gen_range(0..=extent - s)).collect();
        let hi: Vec<u32> = lo.iter().zip(&side).map(|(l, s)| l + s).collect();
        let sign = if rng.gen_bool(0.8) { 1 } else { -1 };
        body.add_scaled(&box_chain(x, &lo, &hi)?, sign);
    }
    Ok(body.boundary(x))
}
