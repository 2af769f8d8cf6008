//! Approximation of a cycle by a piecewise minimizing cycle at scale s.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use super::affine::{round_to_vertices, signed_multiplicities, skeleton_reduce, AffineChain, PointTable};
use super::displace::{displacement_decompose, kuhn_simplices, CellChainMap, NerveRounding};
use crate::chains::Chain;
use crate::complex::{CellId, MetricComplex};
use crate::cover::{build_cover, nerve, psi_with, sort_with_sign, NerveMap, TauField};
use crate::error::{Error, Result, StageExt};
use crate::fill::{check_cycle, cone_filling, min_filling, MinFillOptions, PiecewiseMinimizing, SimplexBuilder};
use crate::numeric::{to_f64, Q};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RemainderKind {
    /// Piece of T - f_#T sliced near a cover member.
    Displacement { member: usize },
    /// Image of the cycle swept out by a radial deformation in a nerve simplex.
    Radial { simplex: Vec<u32> },
    /// Difference between the coned and the minimizing realisation of a simplex.
    Realisation { simplex: Vec<u32> },
}

#[derive(Clone, Debug)]
pub struct Remainder {
    pub kind: RemainderKind,
    pub chain: Chain,
}

/// Measured counterparts of the constants of the approximation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ApproxConstants {
    pub s: f64,
    pub mass_t: f64,
    pub mass_p: f64,
    /// |P'|_1 = sum of |m_i|.
    pub l1: i64,
    /// |P|_1 s^k / M(T).
    pub l1_ratio: f64,
    /// mesh(P) / s.
    pub mesh_ratio: f64,
    /// max diam(Z) / s over the remainder cycles.
    pub remainder_diam_ratio: f64,
    /// sum M(Z) / M(T).
    pub remainder_mass_ratio: f64,
    /// M(S) / (s M(T)).
    pub bridge_ratio: f64,
    /// sum M(R_i) / M(T) for the displacement pieces.
    pub displacement_ratio: f64,
    /// Largest d(v, f(v)) / s.
    pub displacement: f64,
    /// Largest M(Z'_omega) / ||T||(omega) per simplex dimension.
    pub radial: BTreeMap<usize, f64>,
    /// sum M(Z'_omega) / M(T') and M(P') / M(T') (formal masses).
    pub skeleton_z_ratio: f64,
    pub skeleton_p_ratio: f64,
    /// Nerve simplices added because no vertex witnessed a needed carrier.
    pub nerve_extensions: usize,
    /// Simplices whose minimizing realisation fell back to a cone.
    pub simplex_fallbacks: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceLine {
    pub stage: &'static str,
    pub mass: f64,
    pub detail: String,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage={} mass={:.6} {}", self.stage, self.mass, self.detail)
    }
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    /// Realised piecewise minimizing cycle.
    pub p: Chain,
    /// P as a formal sum of minimizing simplices on anchor tuples.
    pub pieces: PiecewiseMinimizing,
    /// f_#T, the image of T under the rounding through the nerve.
    pub rounded: Chain,
    pub remainders: Vec<Remainder>,
    /// Filling of T - P made of cones over the remainders.
    pub bridge: Chain,
    pub constants: ApproxConstants,
    pub trace: Vec<TraceLine>,
}

impl ApproxResult {
    fn empty(dim: usize) -> Self {
        ApproxResult {
            p: Chain::zero(dim),
            pieces: PiecewiseMinimizing::new(dim),
            rounded: Chain::zero(dim),
            remainders: Vec::new(),
            bridge: Chain::zero(dim + 1),
            constants: ApproxConstants::default(),
            trace: Vec::new(),
        }
    }

    /// `{P, Z: [{kind, chain}], S, constants, trace}` with chains in the chain
    /// file format.
    pub fn to_json(&self) -> String {
        let chain = |c: &Chain| serde_json::from_str::<serde_json::Value>(&c.to_json()).expect("chain json");
        let z: Vec<serde_json::Value> = self
            .remainders
            .iter()
            .map(|r| serde_json::json!({"kind": r.kind, "chain": chain(&r.chain)}))
            .collect();
        let out = serde_json::json!({
            "P": chain(&self.p),
            "Z": z,
            "S": chain(&self.bridge),
            "constants": self.constants,
            "trace": self.trace.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        });
        serde_json::to_string(&out).expect("approximation serialises")
    }
}

#[derive(Clone, Debug, Default)]
pub struct ApproxOptions {
    /// Options for the minimizing simplices and the realisation fillings.
    pub fill: MinFillOptions,
}

/// Approximates the k-cycle T (k = 1, 2) on a grid or tree product by a
/// piecewise minimizing cycle P with simplices of diameter O(s):
///
/// 1. cover the support at scale s, push the Kuhn triangulation of T into the
///    nerve through the partition of unity (as a formal affine chain);
/// 2. push that chain into the k-skeleton by radial deformations;
/// 3. round to nerve vertices, giving the simplicial cycle P' and the
///    simplicial cycles D_omega of the deformations;
/// 4. realise P' by minimizing simplices on the anchors (P) and by coned
///    simplices; the difference splits into the cycles Z_sigma;
/// 5. split T - f_#T, with f the rounding through the nerve, into small
///    cycles R_i using a chain homotopy.
///
/// Then T - P = sum R_i + sum phi(D_omega) + sum Z_sigma exactly, and the
/// cones over these cycles form S with boundary T - P.
pub fn pm_approximate(x: &MetricComplex, t: &Chain, s: &Q, opts: &ApproxOptions) -> Result<ApproxResult> {
    let mut builder = SimplexBuilder::new(x, opts.fill.clone());
    pm_approximate_with(&mut builder, t, s)
}

/// As [`pm_approximate`], drawing minimizing simplices from a shared builder so
/// that later fillings of P reuse exactly the same faces.
pub fn pm_approximate_with(builder: &mut SimplexBuilder<'_>, t: &Chain, s: &Q) -> Result<ApproxResult> {
    let x = builder.complex();
    let fill_opts = builder.options().clone();
    check_cycle(x, t)?;
    let k = t.dim();
    if t.is_zero() {
        return Ok(ApproxResult::empty(k));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::Unsupported(format!("approximation of {k}-cycles")));
    }
    if x.product().is_none() {
        return Err(Error::Unsupported("approximation on custom complexes".into()));
    }
    let sf = to_f64(s);
    let mass_t = t.mass_f64(x);
    let mut trace = Vec::new();
    let mut consts = ApproxConstants {
        s: sf,
        mass_t,
        ..ApproxConstants::default()
    };

    // 1. cover, nerve, affine push-forward
    let support = t.support_vertices(x);
    let cov = build_cover(x, &support, s).stage("cover")?;
    let mut nv = nerve(x, &cov).stage("nerve")?;
    let field = TauField::new(x, &cov).stage("partition of unity")?;
    let mut table = PointTable::new();
    let mut point_of: HashMap<CellId, u32> = HashMap::new();
    let mut labels: HashMap<CellId, u32> = HashMap::new();
    for &v in &support {
        let p = psi_with(&field, v).stage("partition of unity")?;
        let id = table.intern(p.rational()).stage("partition of unity")?;
        point_of.insert(v, id);
        labels.insert(v, table.label(id));
    }
    let mut formal = AffineChain::zero(k);
    for (c, m) in t.iter() {
        for (verts, sign) in kuhn_simplices(x, c)? {
            let pts: Vec<u32> = verts.iter().map(|v| point_of[v]).collect();
            formal.add(&pts, m * sign);
        }
    }
    for carrier in formal.carriers(&table) {
        if nv.insert(&carrier) {
            consts.nerve_extensions += 1;
        }
    }
    if !formal.is_cycle() {
        return Err(Error::verification("affine push-forward is not a cycle").in_stage("push-forward"));
    }
    let formal_mass = formal.mass(&table, sf);
    trace.push(TraceLine {
        stage: "cover",
        mass: mass_t,
        detail: format!(
            "members={} nerve_dim={} extensions={} pieces={} formal_mass={formal_mass:.6}",
            cov.members.len(),
            nv.dim(),
            consts.nerve_extensions,
            formal.len()
        ),
    });

    // 2. skeleton reduction
    let (p_formal, zs, sk) = skeleton_reduce(&mut table, &formal, sf).stage("skeleton")?;
    consts.radial = sk.k_meas.clone();
    if formal_mass > 0.0 {
        consts.skeleton_p_ratio = p_formal.mass(&table, sf) / formal_mass;
        consts.skeleton_z_ratio = zs.iter().map(|(_, z)| z.mass(&table, sf)).sum::<f64>() / formal_mass;
    }
    trace.push(TraceLine {
        stage: "skeleton",
        mass: p_formal.mass(&table, sf),
        detail: format!("deformations={} growth={:.4}", zs.len(), sk.level_growth),
    });

    // 3. rounding to nerve vertices
    let p_prime = round_to_vertices(&table, &p_formal);
    let volumes = signed_multiplicities(&table, &p_formal).stage("rounding")?;
    let from_rounding: BTreeMap<Vec<u32>, i64> = p_prime.iter().map(|(k, v)| (k.clone(), v)).collect();
    if volumes != from_rounding {
        return Err(Error::verification("rounded cycle disagrees with signed volumes").in_stage("rounding"));
    }
    let d_omega: Vec<(Vec<u32>, AffineChain)> =
        zs.iter().map(|(w, z)| (w.clone(), round_to_vertices(&table, z))).collect();
    consts.l1 = p_prime.l1();
    trace.push(TraceLine {
        stage: "rounding",
        mass: 0.0,
        detail: format!("simplices={} l1={}", p_prime.len(), consts.l1),
    });

    // 4. displacement pieces through the nerve rounding
    let mut f = NerveRounding::new(x, labels, NerveMap::new(x, &nv));
    let disp = displacement_decompose(t, &cov, &mut f, None).stage("displacement")?;
    consts.displacement = disp.stats.displacement;
    consts.displacement_ratio = disp.stats.mass_ratio;
    let ft = f.chain_image(t).stage("displacement")?;
    let realise = |f: &mut NerveRounding<'_>, c: &AffineChain| -> Result<Chain> {
        let mut out = Chain::zero(c.dim());
        for (sigma, m) in c.iter() {
            out.add_scaled(&f.phi().simplex(sigma)?, m);
        }
        Ok(out)
    };
    let mut check = realise(&mut f, &p_prime).stage("realisation")?;
    let mut radial = Vec::new();
    for (w, d) in &d_omega {
        let c = realise(&mut f, d).stage("realisation")?;
        check += &c;
        radial.push((w.clone(), c));
    }
    if check != ft {
        return Err(Error::verification("f_#T differs from the realised nerve cycles").in_stage("realisation"));
    }
    trace.push(TraceLine {
        stage: "displacement",
        mass: disp.pieces.iter().map(|(_, r)| r.mass_f64(x)).sum(),
        detail: format!(
            "pieces={} displacement={:.4} ratio={:.4}",
            disp.pieces.len(),
            consts.displacement,
            consts.displacement_ratio
        ),
    });

    // 5. minimizing realisation and the cycles Z_sigma
    let fallbacks_before = builder.fallbacks;
    let mut gamma: HashMap<Vec<u32>, Chain> = HashMap::new();
    let mut p = Chain::zero(k);
    let mut pieces = PiecewiseMinimizing::new(k);
    let mut realisation = Vec::new();
    for (sigma, m) in p_prime.iter() {
        let anchors: Vec<CellId> = sigma.iter().map(|&i| f.phi().anchor(i)).collect();
        let (lam, _) = builder.oriented(&anchors).stage("minimizing simplices")?;
        p.add_scaled(&lam, m);
        pieces.add(&anchors, m);
        let mut z = f.phi().simplex(sigma).stage("realisation")?;
        z -= &lam;
        z -= &gamma_boundary(x, &mut f, builder, &mut gamma, sigma, &fill_opts).stage("realisation")?;
        realisation.push((sigma.clone(), z.scaled(m)));
    }
    consts.simplex_fallbacks = builder.fallbacks - fallbacks_before;

    let mut remainders = Vec::new();
    for (i, r) in disp.pieces {
        remainders.push(Remainder {
            kind: RemainderKind::Displacement { member: i },
            chain: r,
        });
    }
    for (w, c) in radial {
        if !c.is_zero() {
            remainders.push(Remainder {
                kind: RemainderKind::Radial { simplex: w },
                chain: c,
            });
        }
    }
    for (sigma, z) in realisation {
        if !z.is_zero() {
            remainders.push(Remainder {
                kind: RemainderKind::Realisation { simplex: sigma },
                chain: z,
            });
        }
    }

    // identities and the bridging filling
    let diff = t - &p;
    let mut sum = Chain::zero(k);
    let mut bridge = Chain::zero(k + 1);
    for r in &remainders {
        if !r.chain.is_cycle(x) {
            return Err(Error::verification(format!("remainder {:?} is not a cycle", r.kind)).in_stage("identities"));
        }
        sum += &r.chain;
        let apex = r.chain.support_vertices(x)[0];
        bridge += &cone_filling(x, &r.chain, apex).stage("bridge")?.chain;
    }
    if !p.is_cycle(x) {
        return Err(Error::verification("P is not a cycle").in_stage("identities"));
    }
    if sum != diff {
        return Err(Error::verification("T - P differs from the sum of the remainders").in_stage("identities"));
    }
    if bridge.boundary(x) != diff {
        return Err(Error::verification("the bridge does not bound T - P").in_stage("identities"));
    }

    let sk_pow = sf.powi(k as i32);
    consts.mass_p = p.mass_f64(x);
    consts.l1_ratio = consts.l1 as f64 * sk_pow / mass_t;
    consts.mesh_ratio = pieces.mesh(x) / sf;
    for r in &remainders {
        consts.remainder_diam_ratio = consts.remainder_diam_ratio.max(r.chain.diam(x) / sf);
        consts.remainder_mass_ratio += r.chain.mass_f64(x) / mass_t;
    }
    consts.bridge_ratio = bridge.mass_f64(x) / (sf * mass_t);
    trace.push(TraceLine {
        stage: "identities",
        mass: consts.mass_p,
        detail: format!(
            "remainders={} l1_ratio={:.4} bridge_ratio={:.4}",
            remainders.len(),
            consts.l1_ratio,
            consts.bridge_ratio
        ),
    });
    Ok(ApproxResult {
        p,
        pieces,
        rounded: ft,
        remainders,
        bridge,
        constants: consts,
        trace,
    })
}

/// Gamma_{j-1} applied to the boundary of the sorted simplex sigma, where
/// boundary Gamma_j(tau) = phi(tau) - Lambda(tau) - Gamma_{j-1}(boundary tau)
/// and Gamma_0 = 0. Each Gamma_j(tau) is a minimal filling of the right side.
fn gamma_boundary(
    x: &MetricComplex,
    f: &mut NerveRounding<'_>,
    builder: &mut SimplexBuilder<'_>,
    memo: &mut HashMap<Vec<u32>, Chain>,
    sigma: &[u32],
    opts: &MinFillOptions,
) -> Result<Chain> {
    let mut out = Chain::zero(sigma.len() - 1);
    if sigma.len() <= 1 {
        return Ok(out);
    }
    for t in 0..sigma.len() {
        let mut face = sigma.to_vec();
        face.remove(t);
        let g = gamma(x, f, builder, memo, &face, opts)?;
        out.add_scaled(&g, if t % 2 == 0 { 1 } else { -1 });
    }
    Ok(out)
}

fn gamma(
    x: &MetricComplex,
    f: &mut NerveRounding<'_>,
    builder: &mut SimplexBuilder<'_>,
    memo: &mut HashMap<Vec<u32>, Chain>,
    tau: &[u32],
    opts: &MinFillOptions,
) -> Result<Chain> {
    let (sorted, sign) = sort_with_sign(tau).ok_or_else(|| Error::invalid("degenerate nerve simplex"))?;
    if let Some(g) = memo.get(&sorted) {
        return Ok(g.scaled(sign));
    }
    let out = if sorted.len() == 1 {
        Chain::zero(1)
    } else {
        let anchors: Vec<CellId> = sorted.iter().map(|&i| f.phi().anchor(i)).collect();
        let mut rhs = f.phi().simplex(&sorted)?;
        rhs -= &builder.oriented(&anchors)?.0;
        rhs -= &gamma_boundary(x, f, builder, memo, &sorted, opts)?;
        if rhs.is_zero() {
            Chain::zero(sorted.len())
        } else {
            min_filling(x, &rhs, opts)?.chain
        }
    };
    memo.insert(sorted, out.clone());
    Ok(out.scaled(sign))
}
