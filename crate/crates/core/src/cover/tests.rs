use super::*;
use crate::complex::MetricComplex;
use crate::numeric::{qi, qr};

fn grid(n: usize, extent: usize) -> MetricComplex {
    MetricComplex::build_grid(n, extent, qi(1)).unwrap()
}

fn all_vertices(x: &MetricComplex) -> Vec<CellId> {
    x.cells_of_dim(0).collect()
}

/// Independent multiplicity oracle: float distances, every vertex of Y against
/// every member vertex.
fn brute_multiplicity(x: &MetricComplex, cov: &Covering, y: &[CellId]) -> usize {
    let r = crate::numeric::to_f64(&cov.s) / 2.0;
    y.iter()
        .map(|&v| {
            cov.members
                .iter()
                .filter(|m| m.iter().any(|&u| x.vertex_dist(u, v) <= r + 1e-9))
                .count()
        })
        .max()
        .unwrap_or(0)
}

#[test]
fn grid2_bricks_on_a_four_by_four_region() {
    let x = grid(2, 3);
    let y = all_vertices(&x);
    let cov = build_cover(&x, &y, &qi(1)).unwrap();
    let rep = verify_cover(&x, &cov, &y).unwrap();
    assert!(rep.multiplicity <= 3);
    assert_eq!(rep.multiplicity, brute_multiplicity(&x, &cov, &y));
    assert!(rep.max_diam_ratio <= 2.0 * 2f64.sqrt() + 1e-12);
    assert!(rep.covers_all);
    assert!((cov.c() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn grid_bricks_keep_multiplicity_at_several_scales() {
    for (n, extent) in [(2usize, 14usize), (3, 8), (4, 4)] {
        let x = grid(n, extent);
        let y = all_vertices(&x);
        for s in [qr(1, 2), qi(1), qr(3, 2), qi(2), qr(5, 2)] {
            let cov = build_cover(&x, &y, &s).unwrap();
            let rep = verify_cover(&x, &cov, &y).unwrap();
            assert!(rep.multiplicity <= n + 1, "n={n} s={s}: {rep:?}");
            assert!(rep.diam_ok && rep.covers_all);
            assert_eq!(rep.multiplicity, brute_multiplicity(&x, &cov, &y));
        }
    }
}

#[test]
fn path_support_gets_consecutive_bricks() {
    let x = grid(2, 17);
    let p = x.product().unwrap();
    let y: Vec<CellId> = (0..=17).map(|i| p.vertex(&[i, 0])).collect();
    let cov = build_cover(&x, &y, &qi(1)).unwrap();
    assert!(verify_cover(&x, &cov, &y).unwrap().multiplicity <= 2);

    let cov = build_cover(&x, &y, &qi(3)).unwrap();
    assert_eq!(cov.members.len(), 3);
    assert_eq!(verify_cover(&x, &cov, &y).unwrap().multiplicity, 2);
    let nv = nerve(&x, &cov).unwrap();
    let edges: Vec<Vec<u32>> = nv.simplices_of_dim(1).cloned().collect();
    assert_eq!(edges, vec![vec![0, 1], vec![1, 2]]);
    assert_eq!(nv.dim(), 1);
}

#[test]
fn single_vertex_support() {
    let x = grid(2, 3);
    let v = x.product().unwrap().vertex(&[1, 2]);
    let cov = build_cover(&x, &[v], &qi(1)).unwrap();
    assert_eq!(cov.members, vec![vec![v]]);
    assert_eq!(verify_cover(&x, &cov, &[v]).unwrap().multiplicity, 1);
    let nv = nerve(&x, &cov).unwrap();
    assert_eq!(nv.num_vertices(), 1);
    let pt = psi(&x, &cov, v).unwrap();
    assert_eq!(pt.coords, vec![(0, 1.0)]);
    let mut phi = NerveMap::new(&x, &nv);
    assert_eq!(phi.simplex(&[0]).unwrap(), crate::chains::Chain::cell(0, v, 1));
}

#[test]
fn tree_product_cover_has_multiplicity_four() {
    let x = MetricComplex::build_tree_product(2, 3, 3).unwrap();
    let y = all_vertices(&x);
    for s in [qi(1), qi(2), qi(3), qr(7, 2)] {
        let cov = build_cover(&x, &y, &s).unwrap();
        let rep = verify_cover(&x, &cov, &y).unwrap();
        assert!(rep.multiplicity <= 4, "s={s}: {rep:?}");
        assert!(rep.diam_ok && rep.covers_all);
        assert_eq!(rep.multiplicity, brute_multiplicity(&x, &cov, &y));
        assert!(rep.max_diam_ratio <= 3.0 * 2f64.sqrt() + 1e-12);
    }
}

#[test]
fn duplicate_members_are_counted_and_gaps_detected() {
    let x = grid(2, 2);
    let p = x.product().unwrap();
    let a = p.vertex(&[0, 0]);
    let b = p.vertex(&[1, 0]);
    let cov = Covering {
        s: qi(1),
        c_sq: qi(2),
        multiplicity_bound: 3,
        members: vec![vec![a], vec![a]],
    };
    let rep = verify_cover(&x, &cov, &[a]).unwrap();
    assert_eq!(rep.multiplicity, 2);
    assert!(!rep.covers_all);
    let cov = Covering {
        members: vec![vec![a]],
        ..cov
    };
    assert!(!verify_cover(&x, &cov, &[a, b]).unwrap().covers_all);
    assert!(verify_cover(&x, &cov, &[a]).unwrap().covers_all);
}

#[test]
fn covering_json_round_trip() {
    let x = grid(2, 5);
    let y = all_vertices(&x);
    let cov = build_cover(&x, &y, &qr(3, 2)).unwrap();
    let back = Covering::from_json(&cov.to_json()).unwrap();
    assert_eq!(back.s, cov.s);
    assert_eq!(back.members, cov.members);
    assert!((back.c() - cov.c()).abs() < 1e-12);
}

#[test]
fn far_members_share_no_edge_and_tau_is_s_inside() {
    let x = grid(2, 10);
    let p = x.product().unwrap();
    let a = p.vertex(&[0, 0]);
    let b = p.vertex(&[3, 0]);
    let cov = Covering {
        s: qi(2),
        c_sq: qi(1),
        multiplicity_bound: 1,
        members: vec![vec![a], vec![b]],
    };
    let nv = nerve(&x, &cov).unwrap();
    assert!(!nv.contains(&[0, 1]));
    let field = TauField::new(&x, &cov).unwrap();
    assert_eq!(field.taus(a), vec![(0, 2.0)]);
    assert_eq!(psi(&x, &cov, b).unwrap().coords, vec![(1, 1.0)]);
    assert!(matches!(psi(&x, &cov, p.vertex(&[9, 9])), Err(Error::Uncovered(_))));
}

#[test]
fn psi_lipschitz_constant_is_within_the_bound() {
    for (n, extent, s) in [(2usize, 12usize, qi(2)), (3, 6, qi(1))] {
        let x = grid(n, extent);
        let y = all_vertices(&x);
        let cov = build_cover(&x, &y, &s).unwrap();
        let lip = psi_lipschitz(&x, &cov).unwrap();
        assert!(lip > 0.0 && lip <= 4.0 * 2f64.sqrt() * (n + 1) as f64, "lip {lip}");
    }
}

#[test]
fn nerve_dimension_and_psi_carriers() {
    let x = grid(3, 6);
    let y = all_vertices(&x);
    let cov = build_cover(&x, &y, &qi(1)).unwrap();
    let nv = nerve(&x, &cov).unwrap();
    assert!(nv.dim() < cov.multiplicity_bound);
    let field = TauField::new(&x, &cov).unwrap();
    for &v in &y {
        let pt = psi_with(&field, v).unwrap();
        assert!(nv.contains(&pt.carrier()));
        let total: f64 = field.taus(v).iter().map(|t| t.1).sum();
        assert!(total >= 1.0 - 1e-12);
        let r = pt.rational();
        assert_eq!(r.iter().map(|c| c.1.clone()).sum::<Q>(), qi(1));
        assert!(r.iter().all(|c| c.1 > Q::zero()));
    }
}

#[test]
fn phi_edges_are_geodesics_between_anchors() {
    let x = grid(2, 12);
    let y = all_vertices(&x);
    let cov = build_cover(&x, &y, &qi(2)).unwrap();
    let nv = nerve(&x, &cov).unwrap();
    let mut phi = NerveMap::new(&x, &nv);
    let bound = (1.0 + 2.0 * cov.c()) * 2.0 * x.kappa();
    for e in nv.simplices_of_dim(1).cloned().collect::<Vec<_>>() {
        let c = phi.simplex(&e).unwrap();
        let expect = &crate::chains::Chain::cell(0, nv.anchors[e[1] as usize], 1)
            - &crate::chains::Chain::cell(0, nv.anchors[e[0] as usize], 1);
        assert_eq!(c.boundary(&x), expect);
        assert!(c.mass_f64(&x) <= bound);
    }
    for t in nv.simplices_of_dim(2).cloned().collect::<Vec<_>>() {
        let c = phi.simplex(&t).unwrap();
        let mut rev = t.clone();
        rev.swap(0, 1);
        assert_eq!(phi.simplex(&rev).unwrap(), -&c);
    }
    assert!(phi.stats().max_anchor_diam_ratio <= 1.0 + 2.0 * cov.c());
    let disp = phi_psi_displacement(&x, &cov, &nv).unwrap();
    assert!(disp <= cov.c() + 1e-12);
}

#[test]
fn sort_with_sign_detects_parity_and_repeats() {
    assert_eq!(sort_with_sign(&[3, 1, 2]), Some((vec![1, 2, 3], 1)));
    assert_eq!(sort_with_sign(&[2, 1]), Some((vec![1, 2], -1)));
    assert_eq!(sort_with_sign(&[1, 2, 1]), None);
}
