use super::*;
use crate::chains::tests_support::block;
use crate::chains::Chain;
use crate::complex::{CellId, MetricComplex};
use crate::cover::{build_cover, nerve, NerveMap};
use crate::numeric::{qi, qr, Q};
use proptest::prelude::*;
use std::collections::HashMap;

fn grid(n: usize, extent: usize) -> MetricComplex {
    MetricComplex::build_grid(n, extent, qi(1)).unwrap()
}

fn pt(table: &mut PointTable, coords: &[(u32, Q)]) -> u32 {
    table.intern(coords.to_vec()).unwrap()
}

fn kuhn_chain(x: &MetricComplex, c: CellId, m: i64, out: &mut AffineChain) {
    for (verts, sign) in kuhn_simplices(x, c).unwrap() {
        let ids: Vec<u32> = verts.iter().map(|v| v.0).collect();
        out.add(&ids, sign * m);
    }
}

#[test]
fn kuhn_triangulation_commutes_with_boundary() {
    for x in [grid(3, 2), MetricComplex::build_tree_product(2, 2, 2).unwrap()] {
        for d in 1..=x.max_dim() {
            for c in x.cells_of_dim(d) {
                let mut k = AffineChain::zero(d);
                kuhn_chain(&x, c, 1, &mut k);
                assert_eq!(k.len(), (1..=d).product::<usize>());
                let mut faces = AffineChain::zero(d - 1);
                for (f, s) in x.boundary(c) {
                    kuhn_chain(&x, f, s as i64, &mut faces);
                }
                assert_eq!(k.boundary(), faces, "cell {c}");
            }
        }
    }
}

#[test]
fn segment_across_a_triangle_is_pushed_through_the_middle_vertex() {
    let mut table = PointTable::new();
    let m01 = pt(&mut table, &[(0, qr(1, 2)), (1, qr(1, 2))]);
    let m12 = pt(&mut table, &[(1, qr(1, 2)), (2, qr(1, 2))]);
    let v1 = pt(&mut table, &[(1, qi(1))]);
    let mut t = AffineChain::zero(1);
    t.add(&[m01, m12], 1);
    let (z, next, step) = radial_deform(&mut table, &t, &[0, 1, 2], 2.0).unwrap();
    let mut expect = AffineChain::zero(1);
    expect.add(&[m01, v1], 1);
    expect.add(&[v1, m12], 1);
    assert_eq!(next, expect);
    let mut back = next.clone();
    back.add_chain(&z, 1);
    assert_eq!(back, t);
    assert!(z.is_cycle());
    // |m01 m12| = s/2 and the detour through vertex 1 has length s
    assert!((step.mass_in - 1.0).abs() < 1e-12);
    assert!((step.mass_out - 2.0).abs() < 1e-12);
    assert!((step.ratio - 3.0).abs() < 1e-12);
}

#[test]
fn radial_deformation_trivial_cases_and_errors() {
    let mut table = PointTable::new();
    let a = pt(&mut table, &[(0, qi(1))]);
    let b = pt(&mut table, &[(1, qi(1))]);
    let c = pt(&mut table, &[(2, qi(1))]);
    let mut t = AffineChain::zero(1);
    t.add(&[a, b], 1);
    t.add(&[b, c], 1);
    t.add(&[c, a], 1);
    let (z, next, _) = radial_deform(&mut table, &t, &[0, 1, 2], 1.0).unwrap();
    assert!(z.is_zero());
    assert_eq!(next, t);
    let (p, zs, _) = skeleton_reduce(&mut table, &t, 1.0).unwrap();
    assert_eq!(p, t);
    assert!(zs.is_empty());

    let mid = pt(&mut table, &[(0, qr(1, 3)), (1, qr(1, 3)), (2, qr(1, 3))]);
    let mut open = AffineChain::zero(1);
    open.add(&[a, mid], 1);
    assert!(radial_deform(&mut table, &open, &[0, 1, 2], 1.0).is_err());
    assert!(radial_deform(&mut table, &t, &[0, 1], 1.0).is_err());
}

#[test]
fn loop_around_the_centre_rounds_to_the_boundary_of_the_simplex() {
    let mut table = PointTable::new();
    let a = pt(&mut table, &[(0, qr(2, 3)), (1, qr(1, 6)), (2, qr(1, 6))]);
    let b = pt(&mut table, &[(0, qr(1, 6)), (1, qr(2, 3)), (2, qr(1, 6))]);
    let c = pt(&mut table, &[(0, qr(1, 6)), (1, qr(1, 6)), (2, qr(2, 3))]);
    let mut t = AffineChain::zero(1);
    t.add(&[a, b], 1);
    t.add(&[b, c], 1);
    t.add(&[c, a], 1);
    let (p, zs, _) = skeleton_reduce(&mut table, &t, 1.0).unwrap();
    assert_eq!(zs.len(), 1);
    let rounded = round_to_vertices(&table, &p);
    let mut expect = AffineChain::zero(1);
    expect.add(&[0, 1], 1);
    expect.add(&[1, 2], 1);
    expect.add(&[2, 0], 1);
    assert_eq!(rounded, expect);
    let vols = signed_multiplicities(&table, &p).unwrap();
    let from_round: std::collections::BTreeMap<Vec<u32>, i64> = rounded.iter().map(|(k, v)| (k.clone(), v)).collect();
    assert_eq!(vols, from_round);
}

#[test]
fn sphere_in_a_tetrahedron_rounds_to_its_boundary() {
    let mut table = PointTable::new();
    let q = |i: usize| -> Vec<(u32, Q)> {
        (0..4u32).map(|j| (j, if j as usize == i { qr(5, 8) } else { qr(1, 8) })).collect()
    };
    let p: Vec<u32> = (0..4).map(|i| pt(&mut table, &q(i))).collect();
    let mut t = AffineChain::zero(2);
    for i in 0..4 {
        let mut face = p.clone();
        face.remove(i);
        t.add(&face, if i % 2 == 0 { 1 } else { -1 });
    }
    assert!(t.is_cycle());
    let (pp, zs, stats) = skeleton_reduce(&mut table, &t, 1.0).unwrap();
    assert_eq!(zs.len(), 1);
    assert!(stats.k_meas[&3] > 0.0);
    let rounded = round_to_vertices(&table, &pp);
    let mut expect = AffineChain::zero(2);
    for i in 0..4u32 {
        let face: Vec<u32> = (0..4).filter(|&j| j != i).collect();
        expect.add(&face, if i % 2 == 0 { 1 } else { -1 });
    }
    assert_eq!(rounded, expect);
    assert_eq!(signed_multiplicities(&table, &pp).unwrap().len(), 4);
}

#[test]
fn piece_volume_of_a_unit_simplex() {
    let mut table = PointTable::new();
    let e: Vec<u32> = (0..3).map(|i| pt(&mut table, &[(i, qi(1))])).collect();
    assert!((piece_volume(&table, &e[..2], 2.0) - 2.0).abs() < 1e-12);
    assert!((piece_volume(&table, &e, 2.0) - 3f64.sqrt()).abs() < 1e-12);
}

fn square_loop(x: &MetricComplex, lo: &[u32], hi: &[u32]) -> Chain {
    block(x, lo, hi).boundary(x)
}

#[test]
fn identity_displacement_has_no_pieces() {
    let x = grid(2, 8);
    let t = square_loop(&x, &[1, 1], &[5, 4]);
    let cov = build_cover(&x, &t.support_vertices(&x), &qi(2)).unwrap();
    let d = displacement_decompose(&t, &cov, &mut IdentityMap(&x), Some(0.0)).unwrap();
    assert!(d.pieces.is_empty());
}

#[test]
fn single_member_displacement_is_one_piece() {
    let x = grid(2, 8);
    let t = square_loop(&x, &[1, 1], &[3, 3]);
    let support = t.support_vertices(&x);
    let cov = build_cover(&x, &support, &qi(20)).unwrap();
    assert_eq!(cov.members.len(), 1);
    let nv = nerve(&x, &cov).unwrap();
    let labels: HashMap<CellId, u32> = support.iter().map(|&v| (v, 0)).collect();
    let mut f = NerveRounding::new(&x, labels, NerveMap::new(&x, &nv));
    let d = displacement_decompose(&t, &cov, &mut f, Some(20.0)).unwrap();
    assert_eq!(d.pieces.len(), 1);
    assert_eq!(d.pieces[0].1, t);
    assert!(displacement_decompose(&t, &cov, &mut f, Some(0.01)).is_err());
}

#[test]
fn zero_cycle_approximates_to_zero() {
    let x = grid(2, 4);
    let r = pm_approximate(&x, &Chain::zero(1), &qi(1), &ApproxOptions::default()).unwrap();
    assert!(r.p.is_zero() && r.remainders.is_empty() && r.bridge.is_zero());
}

#[test]
fn coarse_scale_collapses_a_square() {
    let x = grid(2, 8);
    let t = square_loop(&x, &[1, 1], &[4, 4]);
    let r = pm_approximate(&x, &t, &qi(10), &ApproxOptions::default()).unwrap();
    assert!(r.p.is_zero());
    check_identities(&x, &t, &r);
}

fn check_identities(x: &MetricComplex, t: &Chain, r: &ApproxResult) {
    let mut sum = Chain::zero(t.dim());
    for z in &r.remainders {
        assert!(z.chain.is_cycle(x));
        sum += &z.chain;
    }
    assert_eq!(&sum, &(t - &r.p));
    assert_eq!(r.bridge.boundary(x), t - &r.p);
    assert!(r.p.is_cycle(x));
}

#[test]
fn loop_in_the_plane_at_scale_two() {
    let x = MetricComplex::build_grid(2, 40, qr(1, 4)).unwrap();
    let t = square_loop(&x, &[3, 5], &[37, 30]);
    let r = pm_approximate(&x, &t, &qi(2), &ApproxOptions::default()).unwrap();
    check_identities(&x, &t, &r);
    assert!(!r.p.is_zero());
    assert!(r.constants.mesh_ratio <= 1.0 + 2.0 * 2.0 * 2f64.sqrt() + 1e-9);
    assert!(r.constants.l1_ratio > 0.0);
    assert_eq!(r.trace.len(), 5);
}

#[test]
fn cube_boundary_in_space() {
    let x = grid(3, 12);
    let t = block(&x, &[1, 1, 1], &[11, 11, 11]).boundary(&x);
    let r = pm_approximate(&x, &t, &qi(3), &ApproxOptions::default()).unwrap();
    check_identities(&x, &t, &r);
    assert!(r.constants.bridge_ratio.is_finite());
}

#[test]
fn loop_in_a_tree_product() {
    let x = MetricComplex::build_tree_product(2, 3, 4).unwrap();
    let p = x.product().unwrap();
    let (a, b) = (p.factors()[0].children(0)[0], p.factors()[0].children(0)[1]);
    let a2 = p.factors()[0].children(a)[0];
    let c = p.factors()[1].children(0)[2];
    let c2 = p.factors()[1].children(c)[0];
    let pts = [p.vertex(&[a2, c2]), p.vertex(&[b, c2]), p.vertex(&[b, 0]), p.vertex(&[a2, 0])];
    let mut t = Chain::zero(1);
    for i in 0..4 {
        t += &x.geodesic_path(pts[i], pts[(i + 1) % 4]).unwrap();
    }
    let r = pm_approximate(&x, &t, &qi(1), &ApproxOptions::default()).unwrap();
    check_identities(&x, &t, &r);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn random_plane_cycles_satisfy_the_identities(
        squares in prop::collection::vec((0u32..9, 0u32..9, -1i64..=1), 1..6),
        s in 1i64..4,
    ) {
        let x = grid(2, 10);
        let mut t = Chain::zero(1);
        for (i, j, m) in squares {
            t.add_scaled(&block(&x, &[i, j], &[i + 1, j + 1]).boundary(&x), m);
        }
        let r = pm_approximate(&x, &t, &qi(s), &ApproxOptions::default()).unwrap();
        check_identities(&x, &t, &r);
    }
}

#[test]
fn diamond_loops_need_radial_deformations() {
    let x = MetricComplex::build_grid(2, 40, qr(1, 4)).unwrap();
    let mut total = 0;
    for rad in [8i64, 13, 17] {
        let mut t = Chain::zero(1);
        for i in 0..40u32 {
            for j in 0..40u32 {
                if (i as i64 - 20).abs() + (j as i64 - 20).abs() < rad {
                    t += &block(&x, &[i, j], &[i + 1, j + 1]).boundary(&x);
                }
            }
        }
        for s in [qi(1), qr(3, 2), qi(2), qr(5, 2)] {
            let r = pm_approximate(&x, &t, &s, &ApproxOptions::default()).unwrap();
            check_identities(&x, &t, &r);
            total += r.constants.radial.len();
        }
    }
    assert!(total > 0);
}

#[test]
fn octahedral_sphere_needs_deformations_in_tetrahedra() {
    let x = MetricComplex::build_grid(3, 16, qr(1, 2)).unwrap();
    let mut t = Chain::zero(2);
    for i in 0..16u32 {
        for j in 0..16u32 {
            for k in 0..16u32 {
                if (i as i64 - 8).abs() + (j as i64 - 8).abs() + (k as i64 - 8).abs() < 6 {
                    t += &block(&x, &[i, j, k], &[i + 1, j + 1, k + 1]).boundary(&x);
                }
            }
        }
    }
    let r = pm_approximate(&x, &t, &qr(3, 2), &ApproxOptions::default()).unwrap();
    check_identities(&x, &t, &r);
    assert!(r.constants.radial.contains_key(&3));
}
