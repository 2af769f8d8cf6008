//! The nerve of a covering, the partition-of-unity map into it and the
//! realisation of nerve simplices back in the complex.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::Covering;
use crate::chains::{vertex_set_diam, Chain};
use crate::complex::{CellId, MetricComplex};
use crate::error::{Error, Result};
use crate::fill::cone_filling;
use crate::numeric::{q_to_string, qi, round_dyadic, to_f64, Q};

/// Distances from vertices to covering members, in units of the squared edge
/// length, restricted to members closer than s/2.
pub(crate) struct TauField<'a> {
    x: &'a MetricComplex,
    cov: &'a Covering,
    strict_max: u64,
    h: f64,
    owners: HashMap<CellId, Vec<u32>>,
}

impl<'a> TauField<'a> {
    pub(crate) fn new(x: &'a MetricComplex, cov: &'a Covering) -> Result<Self> {
        let p = x
            .product()
            .ok_or_else(|| Error::Unsupported("nerves are built for grids and tree products".into()))?;
        let h = p.edge_length();
        let thr = &cov.s * &cov.s / (qi(4) * h * h);
        let strict_max = (thr.ceil() - Q::one()).to_integer().to_u64().unwrap_or(u64::MAX);
        let mut owners: HashMap<CellId, Vec<u32>> = HashMap::new();
        for (i, m) in cov.members.iter().enumerate() {
            for &v in m {
                owners.entry(v).or_default().push(i as u32);
            }
        }
        Ok(TauField {
            x,
            cov,
            strict_max,
            h: to_f64(h),
            owners,
        })
    }

    /// Members i with d(v, B_i) < s/2 and the squared distance in units.
    pub(crate) fn support(&self, v: CellId) -> Vec<(u32, u64)> {
        let mut best: BTreeMap<u32, u64> = BTreeMap::new();
        for (owned, d) in super::near_owned(self.x, v, self.strict_max, &self.owners) {
            for &i in owned {
                let e = best.entry(i).or_insert(d);
                *e = (*e).min(d);
            }
        }
        best.into_iter().collect()
    }

    /// tau_i(v) = s - 2 d(v, B_i) for the members in the support.
    pub(crate) fn taus(&self, v: CellId) -> Vec<(u32, f64)> {
        let s = to_f64(&self.cov.s);
        self.support(v)
            .into_iter()
            .map(|(i, d)| (i, s - 2.0 * self.h * (d as f64).sqrt()))
            .collect()
    }
}

/// The nerve of a covering: vertex i stands for member B_i, and a vertex set
/// spans a simplex when some covered vertex is closer than s/2 to each of its
/// members.
#[derive(Clone, Debug)]
pub struct Nerve {
    pub s: Q,
    /// Least vertex of each member.
    pub anchors: Vec<CellId>,
    simplices: BTreeSet<Vec<u32>>,
}

impl Nerve {
    pub fn num_vertices(&self) -> usize {
        self.anchors.len()
    }

    pub fn dim(&self) -> usize {
        self.simplices.iter().map(|s| s.len() - 1).max().unwrap_or(0)
    }

    /// Whether the sorted vertex set spans a simplex.
    pub fn contains(&self, simplex: &[u32]) -> bool {
        self.simplices.contains(simplex)
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Vec<u32>> + '_ {
        self.simplices.iter()
    }

    pub fn simplices_of_dim(&self, d: usize) -> impl Iterator<Item = &Vec<u32>> + '_ {
        self.simplices.iter().filter(move |s| s.len() == d + 1)
    }

    /// Adds a simplex and its faces; used when an approximation needs a carrier
    /// that no vertex witnesses.
    pub fn insert(&mut self, simplex: &[u32]) -> bool {
        if self.contains(simplex) {
            return false;
        }
        for mask in 1u32..(1 << simplex.len()) {
            let face: Vec<u32> = (0..simplex.len())
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| simplex[b])
                .collect();
            self.simplices.insert(face);
        }
        true
    }

    /// `{s, edge_length, anchors, simplices}` with simplices as sorted index lists.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            s: String,
            edge_length: String,
            anchors: &'a [CellId],
            simplices: Vec<&'a Vec<u32>>,
        }
        serde_json::to_string(&Out {
            s: q_to_string(&self.s),
            edge_length: q_to_string(&self.s),
            anchors: &self.anchors,
            simplices: self.simplices.iter().collect(),
        })
        .expect("nerve serialises")
    }
}

/// Builds the nerve witnessed by every covered vertex.
pub fn nerve(x: &MetricComplex, cov: &Covering) -> Result<Nerve> {
    let field = TauField::new(x, cov)?;
    let mut out = Nerve {
        s: cov.s.clone(),
        anchors: Vec::with_capacity(cov.members.len()),
        simplices: BTreeSet::new(),
    };
    for m in &cov.members {
        let z = *m
            .iter()
            .min()
            .ok_or_else(|| Error::invalid("covering has an empty member"))?;
        out.anchors.push(z);
    }
    if out.anchors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("covering members must be sorted by their least vertex"));
    }
    for m in &cov.members {
        for &v in m {
            let support: Vec<u32> = field.support(v).into_iter().map(|(i, _)| i).collect();
            out.insert(&support);
        }
    }
    Ok(out)
}

/// A point of the nerve in barycentric coordinates (positive entries only).
/// Its position in the regular simplex of edge length s is s * b / sqrt(2).
#[derive(Clone, Debug, PartialEq)]
pub struct NervePoint {
    pub s: f64,
    pub coords: Vec<(u32, f64)>,
}

impl NervePoint {
    pub fn carrier(&self) -> Vec<u32> {
        self.coords.iter().map(|(i, _)| *i).collect()
    }

    /// Nerve vertex with the largest coordinate, smallest index on ties.
    pub fn label(&self) -> u32 {
        let mut best = self.coords[0];
        for &c in &self.coords[1..] {
            if c.1 > best.1 {
                best = c;
            }
        }
        best.0
    }

    /// Euclidean distance in the nerve.
    pub fn dist(&self, other: &NervePoint) -> f64 {
        let mut sum = 0.0;
        let (mut a, mut b) = (self.coords.iter().peekable(), other.coords.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(i, u)), Some(&&(j, w))) => {
                    if i == j {
                        sum += (u - w) * (u - w);
                        a.next();
                        b.next();
                    } else if i < j {
                        sum += u * u;
                        a.next();
                    } else {
                        sum += w * w;
                        b.next();
                    }
                }
                (Some(&&(_, u)), None) => {
                    sum += u * u;
                    a.next();
                }
                (None, Some(&&(_, w))) => {
                    sum += w * w;
                    b.next();
                }
                (None, None) => break,
            }
        }
        self.s / std::f64::consts::SQRT_2 * sum.sqrt()
    }

    /// Barycentric coordinates frozen to multiples of 2^-20. Every carrier
    /// coordinate stays positive and the largest one absorbs the rounding so
    /// that the sum is exactly one.
    pub fn rational(&self) -> Vec<(u32, Q)> {
        let floor = round_dyadic(1.0 / f64::from(1u32 << 20));
        let mut out: Vec<(u32, Q)> = self
            .coords
            .iter()
            .map(|&(i, b)| (i, round_dyadic(b).max(floor.clone())))
            .collect();
        let top = out
            .iter()
            .enumerate()
            .fold(0, |best, (k, c)| if c.1 > out[best].1 { k } else { best });
        let rest: Q = out
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != top)
            .map(|(_, c)| c.1.clone())
            .sum();
        out[top].1 = Q::one() - rest;
        out
    }
}

/// The partition-of-unity map at a covered vertex: coordinates tau_i / sum tau.
pub fn psi(x: &MetricComplex, cov: &Covering, v: CellId) -> Result<NervePoint> {
    let field = TauField::new(x, cov)?;
    psi_with(&field, v)
}

pub(crate) fn psi_with(field: &TauField<'_>, v: CellId) -> Result<NervePoint> {
    let taus = field.taus(v);
    let total: f64 = taus.iter().map(|t| t.1).sum();
    if taus.is_empty() || total <= 0.0 {
        return Err(Error::Uncovered(format!("vertex {v} is at distance >= s/2 from every member")));
    }
    Ok(NervePoint {
        s: to_f64(&field.cov.s),
        coords: taus.into_iter().map(|(i, t)| (i, t / total)).collect(),
    })
}

/// Largest ratio |psi(u) - psi(v)| / d(u, v) over all pairs of covered vertices.
pub fn psi_lipschitz(x: &MetricComplex, cov: &Covering) -> Result<f64> {
    let field = TauField::new(x, cov)?;
    let verts: Vec<CellId> = cov.members.iter().flatten().copied().collect();
    let points = verts.iter().map(|&v| psi_with(&field, v)).collect::<Result<Vec<_>>>()?;
    let mut best: f64 = 0.0;
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            let d = x.vertex_dist(verts[i], verts[j]);
            if d > 0.0 {
                best = best.max(points[i].dist(&points[j]) / d);
            }
        }
    }
    Ok(best)
}

/// Sorts a vertex tuple, returning the permutation sign, or `None` when a
/// vertex repeats (degenerate simplex).
pub fn sort_with_sign<T: Ord + Copy>(verts: &[T]) -> Option<(Vec<T>, i64)> {
    let mut v = verts.to_vec();
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Measurements of the realisation map.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PhiStats {
    pub simplices: usize,
    /// Largest anchor-set diameter of a realised simplex, divided by s.
    pub max_anchor_diam_ratio: f64,
    /// Largest mass of a realised j-simplex divided by the j-th power of its
    /// anchor diameter, indexed by j.
    pub stretch: Vec<f64>,
}

/// Realises vertex tuples of the complex as chains: a vertex as itself, a pair
/// as the geodesic path, and a longer tuple as the cone over the realised
/// boundary from its least vertex. Nerve simplices map through their anchors.
pub struct NerveMap<'a> {
    x: &'a MetricComplex,
    anchors: Vec<CellId>,
    s: f64,
    memo: HashMap<Vec<CellId>, Chain>,
    stats: PhiStats,
}

impl<'a> NerveMap<'a> {
    pub fn new(x: &'a MetricComplex, nerve: &Nerve) -> Self {
        NerveMap {
            x,
            anchors: nerve.anchors.clone(),
            s: to_f64(&nerve.s),
            memo: HashMap::new(),
            stats: PhiStats::default(),
        }
    }

    pub fn anchor(&self, i: u32) -> CellId {
        self.anchors[i as usize]
    }

    pub fn stats(&self) -> &PhiStats {
        &self.stats
    }

    /// Image of the oriented nerve simplex with the given vertex order.
    pub fn simplex(&mut self, verts: &[u32]) -> Result<Chain> {
        let anchors: Vec<CellId> = verts.iter().map(|&i| self.anchor(i)).collect();
        self.realize(&anchors)
    }

    /// Image of an oriented vertex tuple of the complex.
    pub fn realize(&mut self, verts: &[CellId]) -> Result<Chain> {
        let dim = verts.len().saturating_sub(1);
        let Some((sorted, sign)) = sort_with_sign(verts) else {
            return Ok(Chain::zero(dim));
        };
        if let Some(c) = self.memo.get(&sorted) {
            return Ok(c.scaled(sign));
        }
        let chain = match sorted.len() {
            0 => return Err(Error::invalid("empty simplex")),
            1 => Chain::cell(0, sorted[0], 1),
            2 => self.x.geodesic_path(sorted[0], sorted[1])?,
            _ => {
                let mut bd = Chain::zero(dim - 1);
                for t in 0..sorted.len() {
                    let mut face = sorted.clone();
                    face.remove(t);
                    let f = self.realize(&face)?;
                    bd.add_scaled(&f, if t % 2 == 0 { 1 } else { -1 });
                }
                cone_filling(self.x, &bd, sorted[0])?.chain
            }
        };
        self.record(&sorted, &chain);
        self.memo.insert(sorted, chain.clone());
        Ok(chain.scaled(sign))
    }

    fn record(&mut self, verts: &[CellId], chain: &Chain) {
        let j = verts.len() - 1;
        let diam = vertex_set_diam(self.x, verts);
        self.stats.simplices += 1;
        if self.s > 0.0 {
            self.stats.max_anchor_diam_ratio = self.stats.max_anchor_diam_ratio.max(diam / self.s);
        }
        if self.stats.stretch.len() <= j {
            self.stats.stretch.resize(j + 1, 0.0);
        }
        if j > 0 && diam > 0.0 {
            let r = chain.mass_f64(self.x) / diam.powi(j as i32);
            self.stats.stretch[j] = self.stats.stretch[j].max(r);
        }
    }
}

/// Largest displacement d(v, z_label(v)) / s over covered vertices, where the
/// label is the nerve vertex with the largest coordinate of psi(v).
pub fn phi_psi_displacement(x: &MetricComplex, cov: &Covering, nerve: &Nerve) -> Result<f64> {
    let field = TauField::new(x, cov)?;
    let s = to_f64(&cov.s);
    let mut best: f64 = 0.0;
    for &v in cov.members.iter().flatten() {
        let p = psi_with(&field, v)?;
        let z = nerve.anchors[p.label() as usize];
        best = best.max(x.vertex_dist(v, z) / s);
    }
    Ok(best)
}
