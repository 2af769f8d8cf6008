//! Minimizing simplices and piecewise minimizing chains.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{cone_filling, min_filling, MinFillOptions};
use crate::chains::{vertex_set_diam, Chain};
use crate::complex::{CellId, MetricComplex};
use crate::cover::sort_with_sign;
use crate::error::{Error, Result};
use crate::numeric::Q;

/// Largest simplex dimension handled.
pub const MAX_SIMPLEX_DIM: usize = 4;

/// A minimizing simplex: geodesic edges and, in every higher dimension, a
/// minimal filling of the alternating sum of its facets.
#[derive(Clone, Debug)]
pub struct MinimizingSimplex {
    pub vertices: Vec<CellId>,
    /// The realised top chain, oriented by the given vertex order.
    pub chain: Chain,
    pub mass: Q,
    /// False when some face fell back to a cone filling because the integer
    /// program ran out of budget.
    pub minimizing: bool,
}

/// Builds minimizing simplices with a memo keyed by sorted vertex tuples, so
/// that shared faces are realised by identical chains.
pub struct SimplexBuilder<'a> {
    x: &'a MetricComplex,
    opts: MinFillOptions,
    memo: HashMap<Vec<CellId>, (Chain, bool)>,
    pub solves: usize,
    pub fallbacks: usize,
}

impl<'a> SimplexBuilder<'a> {
    pub fn new(x: &'a MetricComplex, opts: MinFillOptions) -> Self {
        SimplexBuilder {
            x,
            opts,
            memo: HashMap::new(),
            solves: 0,
            fallbacks: 0,
        }
    }

    pub fn complex(&self) -> &'a MetricComplex {
        self.x
    }

    pub fn options(&self) -> &MinFillOptions {
        &self.opts
    }

    pub fn simplex(&mut self, verts: &[CellId]) -> Result<MinimizingSimplex> {
        let (chain, minimizing) = self.oriented(verts)?;
        Ok(MinimizingSimplex {
            vertices: verts.to_vec(),
            mass: chain.mass(self.x),
            chain,
            minimizing,
        })
    }

    /// Realised chain of the oriented tuple and whether every face is minimal.
    pub fn oriented(&mut self, verts: &[CellId]) -> Result<(Chain, bool)> {
        if verts.is_empty() || verts.len() > MAX_SIMPLEX_DIM + 1 {
            return Err(Error::invalid(format!(
                "simplex needs 1..={} vertices, got {}",
                MAX_SIMPLEX_DIM + 1,
                verts.len()
            )));
        }
        for &v in verts {
            if !self.x.contains(v) || self.x.dim(v) != 0 {
                return Err(Error::invalid(format!("{v} is not a vertex")));
            }
        }
        match sort_with_sign(verts) {
            None => Ok((Chain::zero(verts.len() - 1), true)),
            Some((sorted, sign)) => {
                let (c, ok) = self.sorted(&sorted)?;
                Ok((c.scaled(sign), ok))
            }
        }
    }

    fn sorted(&mut self, v: &[CellId]) -> Result<(Chain, bool)> {
        if let Some(hit) = self.memo.get(v) {
            return Ok(hit.clone());
        }
        let out = match v.len() {
            1 => (Chain::cell(0, v[0], 1), true),
            2 => (self.x.geodesic_path(v[0], v[1])?, true),
            _ => {
                let (bd, mut ok) = self.facet_sum(v)?;
                self.solves += 1;
                match min_filling(self.x, &bd, &self.opts) {
                    Ok(f) => (f.chain, ok),
                    Err(Error::SolverBudget { .. }) => {
                        self.fallbacks += 1;
                        ok = false;
                        (cone_filling(self.x, &bd, v[0])?.chain, ok)
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        self.memo.insert(v.to_vec(), out.clone());
        Ok(out)
    }

    /// Alternating sum of the realised facets of a sorted tuple.
    fn facet_sum(&mut self, v: &[CellId]) -> Result<(Chain, bool)> {
        let mut bd = Chain::zero(v.len() - 2);
        let mut ok = true;
        for t in 0..v.len() {
            let mut face = v.to_vec();
            face.remove(t);
            let (f, fok) = self.sorted(&face)?;
            ok &= fok;
            bd.add_scaled(&f, if t % 2 == 0 { 1 } else { -1 });
        }
        Ok((bd, ok))
    }
}

/// A single minimizing simplex with a fresh memo.
pub fn minimizing_simplex(x: &MetricComplex, verts: &[CellId], opts: &MinFillOptions) -> Result<MinimizingSimplex> {
    SimplexBuilder::new(x, opts.clone()).simplex(verts)
}

/// An integral combination of minimizing simplices, stored as a formal chain
/// on sorted vertex tuples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PiecewiseMinimizing {
    dim: usize,
    pieces: BTreeMap<Vec<CellId>, i64>,
}

impl PiecewiseMinimizing {
    pub fn new(dim: usize) -> Self {
        PiecewiseMinimizing {
            dim,
            pieces: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `m` times the oriented simplex; degenerate tuples are dropped.
    pub fn add(&mut self, verts: &[CellId], m: i64) {
        assert_eq!(verts.len(), self.dim + 1, "simplex dimension mismatch");
        if let Some((sorted, sign)) = sort_with_sign(verts) {
            let e = self.pieces.entry(sorted.clone()).or_insert(0);
            *e += sign * m;
            if *e == 0 {
                self.pieces.remove(&sorted);
            }
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Vec<CellId>, i64)> + '_ {
        self.pieces.iter().map(|(k, v)| (k, *v))
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// |P|_1: the sum of the absolute multiplicities.
    pub fn l1(&self) -> i64 {
        self.pieces.values().map(|v| v.abs()).sum()
    }

    /// Largest model distance between two vertices of one piece.
    pub fn mesh(&self, x: &MetricComplex) -> f64 {
        self.pieces
            .keys()
            .map(|v| vertex_set_diam(x, v))
            .fold(0.0, f64::max)
    }

    pub fn vertex_set(&self) -> Vec<CellId> {
        let mut v: Vec<CellId> = self.pieces.keys().flatten().copied().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Alternating boundary of the formal chain.
    pub fn formal_boundary(&self) -> PiecewiseMinimizing {
        let mut out = PiecewiseMinimizing::new(self.dim.saturating_sub(1));
        if self.dim == 0 {
            return out;
        }
        for (v, m) in self.pieces() {
            for t in 0..v.len() {
                let mut face = v.clone();
                face.remove(t);
                out.add(&face, if t % 2 == 0 { m } else { -m });
            }
        }
        out
    }

    /// For 0-chains: multiplicities sum to zero; otherwise the formal boundary vanishes.
    pub fn is_formal_cycle(&self) -> bool {
        if self.dim == 0 {
            self.pieces.values().sum::<i64>() == 0
        } else {
            self.formal_boundary().is_zero()
        }
    }

    /// The cellular chain sum m_i P_i.
    pub fn realize(&self, b: &mut SimplexBuilder<'_>) -> Result<(Chain, bool)> {
        let mut out = Chain::zero(self.dim);
        let mut ok = true;
        for (v, m) in self.pieces() {
            let (c, fok) = b.oriented(v)?;
            ok &= fok;
            out.add_scaled(&c, m);
        }
        Ok((out, ok))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PiecewiseFilling {
    #[serde(skip)]
    pub chain: Chain,
    pub mass: f64,
    /// M(Q) / (diam(V) * mesh(P) * |P|_1), the rank-two form of the bound.
    pub ratio: f64,
    pub diam: f64,
    pub mesh: f64,
    pub l1: i64,
    pub minimizing: bool,
}

/// Fills a piecewise minimizing cycle by completing each piece to a minimizing
/// simplex with the extra vertex `z`; shared faces coincide through the memo.
pub fn fill_piecewise_minimizing(
    b: &mut SimplexBuilder<'_>,
    p: &PiecewiseMinimizing,
    z: CellId,
) -> Result<PiecewiseFilling> {
    let x = b.complex();
    if p.is_zero() {
        return Ok(PiecewiseFilling {
            chain: Chain::zero(p.dim() + 1),
            mass: 0.0,
            ratio: 0.0,
            diam: 0.0,
            mesh: 0.0,
            l1: 0,
            minimizing: true,
        });
    }
    if !p.is_formal_cycle() {
        return Err(Error::NotABoundary {
            dim: p.dim(),
            detail: "piecewise minimizing chain is not a cycle".into(),
        });
    }
    let verts = p.vertex_set();
    if verts.binary_search(&z).is_err() {
        return Err(Error::invalid(format!("apex {z} is not a vertex of the chain")));
    }
    let (target, mut ok) = p.realize(b)?;
    let mut chain = Chain::zero(p.dim() + 1);
    for (v, m) in p.pieces() {
        let mut tuple = Vec::with_capacity(v.len() + 1);
        tuple.push(z);
        tuple.extend_from_slice(v);
        let (c, fok) = b.oriented(&tuple)?;
        ok &= fok;
        chain.add_scaled(&c, m);
    }
    if chain.boundary(x) != target {
        return Err(Error::verification("piecewise filling does not bound the chain"));
    }
    let diam = vertex_set_diam(x, &verts);
    let mesh = p.mesh(x);
    let l1 = p.l1();
    let mass = chain.mass_f64(x);
    let denom = diam * mesh * l1 as f64;
    Ok(PiecewiseFilling {
        chain,
        mass,
        ratio: if denom > 0.0 { mass / denom } else { 0.0 },
        diam,
        mesh,
        l1,
        minimizing: ok,
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SlimnessReport {
    /// Largest distance from a support vertex of P to the support of its boundary.
    pub to_boundary: f64,
    /// Largest distance from a support vertex of a facet to the union of the
    /// other facets.
    pub facet_to_rest: f64,
    /// M(P) / M(boundary P), 0 when the boundary vanishes.
    pub mass_ratio: f64,
}

fn nearest(x: &MetricComplex, from: &[CellId], to: &[CellId]) -> f64 {
    from.iter()
        .map(|&u| to.iter().map(|&v| x.vertex_dist(u, v)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Distance diagnostics of a minimizing simplex of dimension at least two.
pub fn slimness_report(b: &mut SimplexBuilder<'_>, s: &MinimizingSimplex) -> Result<SlimnessReport> {
    let x = b.complex();
    if s.vertices.len() < 3 {
        return Err(Error::invalid("slimness needs a simplex of dimension at least 2"));
    }
    if s.chain.is_zero() {
        return Ok(SlimnessReport::default());
    }
    let bd = s.chain.boundary(x);
    let spt = s.chain.support_vertices(x);
    let bspt = bd.support_vertices(x);
    let to_boundary = if bspt.is_empty() { 0.0 } else { nearest(x, &spt, &bspt) };
    let mut facets = Vec::new();
    for t in 0..s.vertices.len() {
        let mut face = s.vertices.clone();
        face.remove(t);
        facets.push(b.oriented(&face)?.0.support_vertices(x));
    }
    let mut facet_to_rest: f64 = 0.0;
    for (i, f) in facets.iter().enumerate() {
        let rest: Vec<CellId> = facets
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, g)| g.iter().copied())
            .collect();
        if !f.is_empty() && !rest.is_empty() {
            facet_to_rest = facet_to_rest.max(nearest(x, f, &rest));
        }
    }
    let bm = bd.mass_f64(x);
    Ok(SlimnessReport {
        to_boundary,
        facet_to_rest,
        mass_ratio: if bm > 0.0 { s.chain.mass_f64(x) / bm } else { 0.0 },
    })
}
