//! Simplexwise affine chains in the nerve and their radial deformation onto
//! lower skeleta.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::cover::sort_with_sign;
use crate::error::{Error, Result};
use crate::numeric::{qi, to_f64, Q};

/// Barycentric coordinates of a nerve point: sorted by vertex, positive
/// entries only, summing to one.
pub type BaryPoint = Vec<(u32, Q)>;

/// Interned nerve points; chains refer to points by index.
#[derive(Clone, Debug, Default)]
pub struct PointTable {
    points: Vec<BaryPoint>,
    index: HashMap<BaryPoint, u32>,
}

impl PointTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the point, adding it if new. Zero coordinates are dropped.
    pub fn intern(&mut self, mut p: BaryPoint) -> Result<u32> {
        p.retain(|c| !c.1.is_zero());
        p.sort_by_key(|c| c.0);
        if p.is_empty() || p.iter().any(|c| c.1.is_negative()) || p.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("barycentric point needs distinct vertices and positive coordinates"));
        }
        if p.iter().map(|c| &c.1).sum::<Q>() != Q::one() {
            return Err(Error::invalid("barycentric coordinates must sum to one"));
        }
        if let Some(&i) = self.index.get(&p) {
            return Ok(i);
        }
        let i = self.points.len() as u32;
        self.index.insert(p.clone(), i);
        self.points.push(p);
        Ok(i)
    }

    pub fn point(&self, i: u32) -> &BaryPoint {
        &self.points[i as usize]
    }

    pub fn carrier(&self, i: u32) -> Vec<u32> {
        self.point(i).iter().map(|c| c.0).collect()
    }

    /// Vertex with the largest coordinate, smallest index on ties.
    pub fn label(&self, i: u32) -> u32 {
        let p = self.point(i);
        let mut best = &p[0];
        for c in &p[1..] {
            if c.1 > best.1 {
                best = c;
            }
        }
        best.0
    }

    /// Coordinates over the given sorted vertex list (the carrier must lie in it).
    fn dense(&self, i: u32, frame: &[u32]) -> Vec<Q> {
        let mut out = vec![Q::zero(); frame.len()];
        for (v, c) in self.point(i) {
            let k = frame.binary_search(v).expect("point carried by the frame");
            out[k] = c.clone();
        }
        out
    }

    fn intern_dense(&mut self, p: &[Q], frame: &[u32]) -> Result<u32> {
        self.intern(frame.iter().copied().zip(p.iter().cloned()).collect())
    }
}

/// Alternating formal chain of affine simplices spanned by interned points.
/// Tuples with a repeated point vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineChain {
    dim: usize,
    terms: BTreeMap<Vec<u32>, i64>,
}

impl AffineChain {
    pub fn zero(dim: usize) -> Self {
        AffineChain {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, i64)> + '_ {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    /// Adds m times the oriented simplex with the given point order.
    pub fn add(&mut self, pts: &[u32], m: i64) {
        assert_eq!(pts.len(), self.dim + 1, "simplex size");
        if m == 0 {
            return;
        }
        if let Some((sorted, sign)) = sort_with_sign(pts) {
            let e = self.terms.entry(sorted).or_insert(0);
            *e += sign * m;
            if *e == 0 {
                let key = sort_with_sign(pts).unwrap().0;
                self.terms.remove(&key);
            }
        }
    }

    pub fn add_chain(&mut self, other: &AffineChain, m: i64) {
        for (k, v) in other.iter() {
            self.add(k, v * m);
        }
    }

    pub fn boundary(&self) -> AffineChain {
        let mut out = AffineChain::zero(self.dim.saturating_sub(1));
        if self.dim == 0 {
            return out;
        }
        for (k, v) in self.iter() {
            for t in 0..k.len() {
                let mut face = k.clone();
                face.remove(t);
                out.add(&face, if t % 2 == 0 { v } else { -v });
            }
        }
        out
    }

    /// Formal cycle test; for 0-chains the coefficients must sum to zero.
    pub fn is_cycle(&self) -> bool {
        if self.dim == 0 {
            self.terms.values().sum::<i64>() == 0
        } else {
            self.boundary().is_zero()
        }
    }

    pub fn l1(&self) -> i64 {
        self.terms.values().map(|v| v.abs()).sum()
    }

    /// Smallest closed nerve simplex containing the piece.
    pub fn carrier(table: &PointTable, piece: &[u32]) -> Vec<u32> {
        let set: BTreeSet<u32> = piece.iter().flat_map(|&p| table.carrier(p)).collect();
        set.into_iter().collect()
    }

    /// Sum of |m| times the Euclidean volume of each piece in the nerve with
    /// edge length s (an upper bound for the mass of the realised chain).
    pub fn mass(&self, table: &PointTable, s: f64) -> f64 {
        self.iter().map(|(k, v)| v.unsigned_abs() as f64 * piece_volume(table, k, s)).sum()
    }

    /// Part of the chain whose pieces are carried exactly by `omega`.
    pub fn restrict_carrier(&self, table: &PointTable, omega: &[u32]) -> AffineChain {
        AffineChain {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| Self::carrier(table, k) == omega)
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    /// Distinct carriers of the pieces, largest dimension first.
    pub fn carriers(&self, table: &PointTable) -> Vec<Vec<u32>> {
        let set: BTreeSet<Vec<u32>> = self.terms.keys().map(|k| Self::carrier(table, k)).collect();
        let mut out: Vec<Vec<u32>> = set.into_iter().collect();
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        out
    }
}

fn sub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rank of a list of rational vectors.
pub(crate) fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let mut r = 0;
    let cols = rows.first().map_or(0, |v| v.len());
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &rows[r][c];
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Determinant of a square rational matrix.
pub(crate) fn det(mut m: Vec<Vec<Q>>) -> Q {
    let n = m.len();
    let mut out = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(p, c);
            out = -out;
        }
        out *= &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[c][c];
                let pivot = m[c].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
    }
    out
}

/// Volume of an affine simplex in the nerve with edge length s.
pub fn piece_volume(table: &PointTable, piece: &[u32], s: f64) -> f64 {
    let k = piece.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let frame = AffineChain::carrier(table, piece);
    let pts: Vec<Vec<Q>> = piece.iter().map(|&p| table.dense(p, &frame)).collect();
    let edges: Vec<Vec<Q>> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    let gram: Vec<Vec<Q>> = edges.iter().map(|a| edges.iter().map(|b| dot(a, b)).collect()).collect();
    let g = to_f64(&det(gram)).max(0.0);
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    g.sqrt() / fact * (s * s / 2.0).powf(k as f64 / 2.0)
}

/// Clips a closed polygon (or a segment, for two points) to {g(p) <= 0} for a
/// linear g.
fn clip(poly: &[Vec<Q>], g: &dyn Fn(&[Q]) -> Q) -> Vec<Vec<Q>> {
    let cut = |a: &[Q], b: &[Q], ga: &Q, gb: &Q| -> Vec<Q> {
        let t = ga / (ga - gb);
        a.iter().zip(b).map(|(x, y)| x + &t * (y - x)).collect()
    };
    if poly.len() == 2 {
        let (ga, gb) = (g(&poly[0]), g(&poly[1]));
        let (ina, inb) = (!ga.is_positive(), !gb.is_positive());
        return match (ina, inb) {
            (true, true) => poly.to_vec(),
            (false, false) => Vec::new(),
            (true, false) => vec![poly[0].clone(), cut(&poly[0], &poly[1], &ga, &gb)],
            (false, true) => vec![cut(&poly[0], &poly[1], &ga, &gb), poly[1].clone()],
        };
    }
    let mut out: Vec<Vec<Q>> = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (&poly[i], &poly[(i + 1) % n]);
        let (ga, gb) = (g(a), g(b));
        let (ina, inb) = (!ga.is_positive(), !gb.is_positive());
        if ina {
            out.push(a.clone());
        }
        if ina != inb && !ga.is_zero() && !gb.is_zero() {
            out.push(cut(a, b, &ga, &gb));
        }
    }
    out.dedup();
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialStep {
    /// The open simplex that was emptied.
    pub omega: Vec<u32>,
    /// Centre of the projection.
    pub centre: Vec<(u32, f64)>,
    /// Candidates tried before and including the accepted one.
    pub candidates: usize,
    /// Formal mass of T restricted to omega.
    pub mass_in: f64,
    /// Formal mass of the projected part.
    pub mass_out: f64,
    /// Formal mass of the cycle Z.
    pub mass_z: f64,
    /// M(Z) / ||T||(omega).
    pub ratio: f64,
}

/// Largest number of centre candidates examined per simplex.
const MAX_CANDIDATES: usize = 64;
/// Number of admissible centres compared by projected mass.
const COMPARED: usize = 6;

/// Barycentre first, then interior lattice points a/q with q = l+2, l+3, ...
/// in lexicographic order of the numerators.
fn candidates(l: usize) -> Vec<Vec<Q>> {
    fn compositions(q: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            prefix.push(q);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in 1..=q - (n - 1) {
            prefix.push(a);
            compositions(q - a, n - 1, prefix, out);
            prefix.pop();
        }
    }
    let n = l + 1;
    let mut out = vec![vec![Q::new(1.into(), (n as i64).into()); n]];
    let mut q = n + 1;
    while out.len() < MAX_CANDIDATES && q < n + 12 {
        let mut parts = Vec::new();
        compositions(q, n, &mut Vec::new(), &mut parts);
        for c in parts {
            let p: Vec<Q> = c.iter().map(|&a| Q::new((a as i64).into(), (q as i64).into())).collect();
            if out.len() < MAX_CANDIDATES && !out.contains(&p) {
                out.push(p);
            }
        }
        q += 1;
    }
    out
}

/// Projects the part of `t` carried by the open simplex `omega` radially from a
/// centre in omega onto its boundary. Returns (Z, T_next) with T = T_next + Z
/// formally, Z a formal cycle carried by the closed simplex, and no piece of
/// T_next carried by omega. Pieces are clipped to the regions where the
/// projection is projective, so that the images are again affine simplices.
pub fn radial_deform(
    table: &mut PointTable,
    t: &AffineChain,
    omega: &[u32],
    s: f64,
) -> Result<(AffineChain, AffineChain, RadialStep)> {
    let k = t.dim();
    let l = omega.len() - 1;
    if k >= l {
        return Err(Error::invalid("radial deformation needs a simplex of dimension above the chain"));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::Unsupported(format!("radial deformation of {k}-chains")));
    }
    let bd = t.boundary();
    if bd.iter().any(|(f, _)| AffineChain::carrier(table, f) == omega) {
        return Err(Error::invalid("the boundary of the chain meets the open simplex"));
    }
    let inside = t.restrict_carrier(table, omega);
    let mass_in = inside.mass(table, s);
    let mut step = RadialStep {
        omega: omega.to_vec(),
        centre: Vec::new(),
        candidates: 0,
        mass_in,
        mass_out: 0.0,
        mass_z: 0.0,
        ratio: 0.0,
    };
    if inside.is_zero() {
        return Ok((AffineChain::zero(k), t.clone(), step));
    }
    let pieces: Vec<(Vec<Vec<Q>>, i64)> = inside
        .iter()
        .map(|(p, m)| (p.iter().map(|&i| table.dense(i, omega)).collect(), m))
        .collect();
    let hull_rank: Vec<usize> = pieces
        .iter()
        .map(|(pts, _)| rank(pts[1..].iter().map(|p| sub(p, &pts[0])).collect()))
        .collect();

    let mut best: Option<(f64, AffineChain, Vec<Q>)> = None;
    let mut admissible = 0;
    for z in candidates(l) {
        step.candidates += 1;
        let in_hull = pieces.iter().zip(&hull_rank).any(|((pts, _), &r)| {
            let mut rows: Vec<Vec<Q>> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
            rows.push(sub(&z, &pts[0]));
            rank(rows) == r
        });
        if in_hull {
            continue;
        }
        let projected = project(table, &pieces, &z, omega, k)?;
        let mut zc = inside.clone();
        zc.add_chain(&projected, -1);
        if !zc.is_cycle() {
            continue;
        }
        admissible += 1;
        let m = projected.mass(table, s);
        if best.as_ref().is_none_or(|b| m < b.0 - 1e-12) {
            best = Some((m, projected, z));
        }
        if admissible == COMPARED {
            break;
        }
    }
    let Some((mass_out, projected, z)) = best else {
        return Err(Error::verification(format!(
            "no admissible projection centre in simplex {omega:?} after {} candidates",
            step.candidates
        )));
    };
    let mut zc = inside.clone();
    zc.add_chain(&projected, -1);
    let mut next = t.clone();
    next.add_chain(&inside, -1);
    next.add_chain(&projected, 1);
    step.centre = omega.iter().copied().zip(z.iter().map(to_f64)).collect();
    step.mass_out = mass_out;
    step.mass_z = zc.mass(table, s);
    step.ratio = step.mass_z / mass_in.max(f64::MIN_POSITIVE);
    Ok((zc, next, step))
}

fn project(table: &mut PointTable, pieces: &[(Vec<Vec<Q>>, i64)], z: &[Q], omega: &[u32], k: usize) -> Result<AffineChain> {
    let n = omega.len();
    let mut out = AffineChain::zero(k);
    for (pts, m) in pieces {
        for i in 0..n {
            let mut poly = pts.clone();
            for j in (0..n).filter(|&j| j != i) {
                let (zi, zj) = (z[i].clone(), z[j].clone());
                poly = clip(&poly, &move |p: &[Q]| &p[i] * &zj - &p[j] * &zi);
                if poly.len() < k + 1 {
                    break;
                }
            }
            if poly.len() < k + 1 {
                continue;
            }
            let mut ids = Vec::with_capacity(poly.len());
            for p in &poly {
                let t = &z[i] / (&z[i] - &p[i]);
                let mut img: Vec<Q> = p.iter().zip(z).map(|(a, c)| c + &t * (a - c)).collect();
                img[i] = Q::zero();
                ids.push(table.intern_dense(&img, omega)?);
            }
            if k == 1 {
                out.add(&ids, *m);
            } else {
                for j in 1..ids.len() - 1 {
                    out.add(&[ids[0], ids[j], ids[j + 1]], *m);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SkeletonStats {
    /// (l, formal mass of T^l before the sweep at dimension l).
    pub level_mass: Vec<(usize, f64)>,
    /// Largest M(Z'_omega) / ||T||(omega) per simplex dimension l.
    pub k_meas: BTreeMap<usize, f64>,
    /// Largest M(T^(l-1)) / M(T^l).
    pub level_growth: f64,
    pub steps: Vec<RadialStep>,
}

/// A realisation cycle with the simplex it came from.
pub type SkeletonCycle = (Vec<u32>, AffineChain);

/// Pushes a formal cycle into the k-skeleton by descending radial
/// deformations: T' = P' + sum Z'_omega exactly.
pub fn skeleton_reduce(
    table: &mut PointTable,
    t: &AffineChain,
    s: f64,
) -> Result<(AffineChain, Vec<SkeletonCycle>, SkeletonStats)> {
    let k = t.dim();
    if !t.is_cycle() {
        return Err(Error::NotABoundary {
            dim: k,
            detail: "skeleton reduction needs a formal cycle".into(),
        });
    }
    let mut current = t.clone();
    let mut zs = Vec::new();
    let mut stats = SkeletonStats::default();
    let top = current.carriers(table).first().map_or(0, |c| c.len() - 1);
    for l in (k + 1..=top).rev() {
        let before = current.mass(table, s);
        stats.level_mass.push((l, before));
        for omega in current.carriers(table).into_iter().filter(|c| c.len() == l + 1) {
            let (z, next, step) = radial_deform(table, &current, &omega, s)?;
            let e = stats.k_meas.entry(l).or_insert(0.0);
            *e = e.max(step.ratio);
            stats.steps.push(step);
            current = next;
            if !z.is_zero() {
                zs.push((omega, z));
            }
        }
        let after = current.mass(table, s);
        if before > 0.0 {
            stats.level_growth = stats.level_growth.max(after / before);
        }
    }
    let mut check = current.clone();
    for (_, z) in &zs {
        check.add_chain(z, 1);
    }
    if check != *t {
        return Err(Error::verification("skeleton reduction does not telescope"));
    }
    Ok((current, zs, stats))
}

/// Simplicial chain on nerve vertex tuples (alternating, sorted keys).
pub type SimplicialChain = AffineChain;

/// Vertexwise image under the nearest-vertex rounding p -> argmax coordinate.
pub fn round_to_vertices(table: &PointTable, t: &AffineChain) -> SimplicialChain {
    let mut out = AffineChain::zero(t.dim());
    for (k, v) in t.iter() {
        let labels: Vec<u32> = k.iter().map(|&p| table.label(p)).collect();
        out.add(&labels, v);
    }
    out
}

/// Multiplicity of a skeletal k-cycle on each k-simplex from signed volumes.
/// Pieces carried by lower faces contribute nothing.
pub fn signed_multiplicities(table: &PointTable, t: &AffineChain) -> Result<BTreeMap<Vec<u32>, i64>> {
    let k = t.dim();
    let mut acc: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
    for (piece, m) in t.iter() {
        let frame = AffineChain::carrier(table, piece);
        if frame.len() > k + 1 {
            return Err(Error::invalid("chain is not carried by the k-skeleton"));
        }
        if frame.len() < k + 1 {
            continue;
        }
        let pts: Vec<Vec<Q>> = piece.iter().map(|&p| table.dense(p, &frame)).collect();
        let rows: Vec<Vec<Q>> = pts[1..].iter().map(|p| sub(&p[1..], &pts[0][1..])).collect();
        *acc.entry(frame).or_insert_with(Q::zero) += det(rows) * qi(m);
    }
    let mut out = BTreeMap::new();
    for (sigma, v) in acc {
        if !v.is_integer() {
            return Err(Error::verification(format!("non-integral multiplicity {v} on {sigma:?}")));
        }
        let m: i64 = v.to_integer().try_into().map_err(|_| Error::verification("multiplicity overflow"))?;
        if m != 0 {
            out.insert(sigma, m);
        }
    }
    Ok(out)
}
