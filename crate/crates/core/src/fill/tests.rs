use super::*;
use crate::chains::tests_support::block;
use crate::numeric::{qi, qr};

fn grid(n: usize, extent: usize) -> MetricComplex {
    MetricComplex::build_grid(n, extent, qi(1)).unwrap()
}

fn v(x: &MetricComplex, nodes: &[u32]) -> CellId {
    x.product().unwrap().vertex(nodes)
}

fn path_loop(x: &MetricComplex, pts: &[&[u32]]) -> Chain {
    let mut c = Chain::zero(1);
    for i in 0..pts.len() {
        let a = v(x, pts[i]);
        let b = v(x, pts[(i + 1) % pts.len()]);
        c += &x.geodesic_path(a, b).unwrap();
    }
    c
}

#[test]
fn unit_square_boundary_fills_with_the_square() {
    let x = MetricComplex::build_grid(2, 3, qr(1, 2)).unwrap();
    let sq = block(&x, &[1, 1], &[2, 2]);
    let f = min_filling(&x, &sq.boundary(&x), &MinFillOptions::default()).unwrap();
    assert_eq!(f.chain, sq);
    assert_eq!(f.mass, qr(1, 4));
    assert!(f.stats.lexicographic);
}

#[test]
fn cube_boundary_fills_with_the_block() {
    let x = grid(3, 6);
    for m in 1..=4u32 {
        let b = block(&x, &[1, 1, 1], &[1 + m, 1 + m, 1 + m]);
        let f = min_filling(&x, &b.boundary(&x), &MinFillOptions::default()).unwrap();
        assert_eq!(f.mass, qi((m * m * m) as i64));
        assert_eq!(f.chain, b);
    }
}

#[test]
fn non_cycles_and_non_boundaries_are_rejected() {
    let x = grid(2, 3);
    let path = x.geodesic_path(v(&x, &[0, 0]), v(&x, &[2, 1])).unwrap();
    assert!(matches!(
        min_filling(&x, &path, &MinFillOptions::default()),
        Err(Error::NotABoundary { .. })
    ));
    // A square loop without its 2-cell.
    let text = crate::complex::tests::UNIT_SQUARE_JSON.replace(
        ",\n    {\"id\": 8, \"dim\": 2, \"volume\": 0.5, \"boundary\": [[4, 1], [7, 1], [5, -1], [6, -1]]}",
        "",
    );
    let hole = MetricComplex::from_custom_json(&text).unwrap();
    let cyc = Chain::from_terms(1, [(CellId(4), 1), (CellId(7), 1), (CellId(5), -1), (CellId(6), -1)]);
    let err = min_filling(&hole, &cyc, &MinFillOptions::default()).unwrap_err();
    assert!(err.to_string().contains("homology"), "{err}");
}

#[test]
fn custom_complex_minimal_filling() {
    let x = MetricComplex::from_custom_json(crate::complex::tests::UNIT_SQUARE_JSON).unwrap();
    let cyc = Chain::from_terms(1, [(CellId(4), 1), (CellId(7), 1), (CellId(5), -1), (CellId(6), -1)]);
    let f = min_filling(&x, &cyc, &MinFillOptions::default()).unwrap();
    assert_eq!(f.chain, Chain::cell(2, CellId(8), 1));
    assert_eq!(f.mass, qr(1, 2));
    let c = cone_filling(&x, &cyc, CellId(0)).unwrap();
    assert_eq!(c.chain, f.chain);
}

#[test]
fn ties_break_lexicographically() {
    // A hexagonal loop on the unit cube bounds three faces on either side.
    let x = grid(3, 1);
    let t = path_loop(
        &x,
        &[&[0, 0, 0], &[1, 0, 0], &[1, 1, 0], &[1, 1, 1], &[0, 1, 1], &[0, 0, 1]],
    );
    assert!(t.is_cycle(&x));
    let f = min_filling(&x, &t, &MinFillOptions::default()).unwrap();
    assert_eq!(f.mass, qi(3));
    assert!(f.stats.lexicographic);
    // Every optimal filling differs from the returned one by a multiple of the
    // cube boundary; the returned vector must be lexicographically least.
    let cube = x.cells_of_dim(3).next().unwrap();
    let shell = Chain::cell(3, cube, 1).boundary(&x);
    let squares: Vec<CellId> = x.cells_of_dim(2).collect();
    for k in [-1i64, 1] {
        let other = &f.chain + &shell.scaled(k);
        if other.mass(&x) == qi(3) {
            let a: Vec<i64> = squares.iter().map(|&c| f.chain.coeff(c)).collect();
            let b: Vec<i64> = squares.iter().map(|&c| other.coeff(c)).collect();
            assert!(a < b);
        }
    }
}

#[test]
fn zero_cycles_fill_with_paths() {
    let x = grid(2, 4);
    let t = &Chain::cell(0, v(&x, &[3, 1]), 1) - &Chain::cell(0, v(&x, &[0, 0]), 1);
    let f = min_filling(&x, &t, &MinFillOptions::default()).unwrap();
    assert_eq!(f.mass, qi(4));
    assert_eq!(f.chain.boundary(&x), t);
}

#[test]
fn cone_from_corner_of_unit_square() {
    let x = grid(2, 2);
    let sq = block(&x, &[0, 0], &[1, 1]);
    let c = cone_filling(&x, &sq.boundary(&x), v(&x, &[0, 0])).unwrap();
    assert_eq!(c.chain, sq);
    assert!(c.ratio <= 2.0);
}

#[test]
fn cone_bounds_cycles_in_grids_and_trees() {
    let x = grid(3, 4);
    let b = &block(&x, &[0, 1, 1], &[2, 3, 2]) + &block(&x, &[2, 2, 2], &[4, 3, 4]);
    let t = b.boundary(&x);
    for apex in [v(&x, &[0, 0, 0]), v(&x, &[4, 4, 4]), v(&x, &[2, 0, 3])] {
        let c = cone_filling(&x, &t, apex).unwrap();
        assert_eq!(c.chain.boundary(&x), t);
    }
    let loop1 = path_loop(&x, &[&[0, 0, 0], &[3, 1, 2], &[1, 4, 4]]);
    let c = cone_filling(&x, &loop1, v(&x, &[2, 2, 0])).unwrap();
    assert_eq!(c.chain.boundary(&x), loop1);

    let tp = MetricComplex::build_tree_product(2, 3, 3).unwrap();
    let p = tp.product().unwrap();
    let pts = [p.vertex(&[7, 2]), p.vertex(&[12, 30]), p.vertex(&[3, 9]), p.vertex(&[0, 1])];
    let mut cyc = Chain::zero(1);
    for i in 0..pts.len() {
        cyc += &tp.geodesic_path(pts[i], pts[(i + 1) % pts.len()]).unwrap();
    }
    let apex = p.vertex(&[14, 5]);
    let c = cone_filling(&tp, &cyc, apex).unwrap();
    assert_eq!(c.chain.boundary(&tp), cyc);
    // Fillings are unique in a 2-dimensional contractible complex.
    let m = min_filling(&tp, &cyc, &MinFillOptions::default()).unwrap();
    assert_eq!(m.chain, c.chain);
    assert_eq!(m.stats.free_after_presolve, 0);
}

#[test]
fn cone_rejects_bad_apex() {
    let x = grid(2, 2);
    let t = block(&x, &[0, 0], &[1, 1]).boundary(&x);
    assert!(cone_filling(&x, &t, CellId(10_000)).is_err());
    let edge = x.cells_of_dim(1).next().unwrap();
    assert!(cone_filling(&x, &t, edge).is_err());
}

#[test]
fn minimizing_edges_are_geodesics_and_degenerate_simplices_vanish() {
    let x = grid(2, 6);
    let (a, b) = (v(&x, &[0, 0]), v(&x, &[4, 3]));
    let s = minimizing_simplex(&x, &[a, b], &MinFillOptions::default()).unwrap();
    assert_eq!(s.chain, x.geodesic_path(a, b).unwrap());
    let s = minimizing_simplex(&x, &[a, b, a], &MinFillOptions::default()).unwrap();
    assert!(s.chain.is_zero());
    assert_eq!(s.chain.dim(), 2);
}

#[test]
fn minimizing_triangle_bounds_its_edges_and_flips_with_orientation() {
    let x = grid(2, 6);
    let t = [v(&x, &[0, 0]), v(&x, &[3, 0]), v(&x, &[0, 3])];
    let mut b = SimplexBuilder::new(&x, MinFillOptions::default());
    let s = b.simplex(&t).unwrap();
    let edges = path_loop(&x, &[&[0, 0], &[3, 0], &[0, 3]]);
    let mut expect = Chain::zero(1);
    for (i, j) in [(1, 2), (0, 2), (0, 1)] {
        let sign = if (i, j) == (0, 2) { -1 } else { 1 };
        expect.add_scaled(&b.oriented(&[t[i], t[j]]).unwrap().0, sign);
    }
    assert_eq!(s.chain.boundary(&x), expect);
    let (lo, hi) = (t[0].min(t[1]), t[0].max(t[1]));
    assert_eq!(b.oriented(&[lo, hi]).unwrap().0, x.geodesic_path(lo, hi).unwrap());
    // both realisations of the triangle are monotone staircases inside the hull
    assert!(edges.is_cycle(&x));
    assert!(s.mass <= qi(9));
    assert!(s.minimizing);
    let (rev, _) = b.oriented(&[t[1], t[0], t[2]]).unwrap();
    assert_eq!(rev, -&s.chain);
    let rep = slimness_report(&mut b, &s).unwrap();
    assert!(rep.to_boundary <= 3.0 * 2f64.sqrt());
    assert!(rep.mass_ratio > 0.0);
}

#[test]
fn piecewise_tetrahedron_boundary_fills_from_a_vertex() {
    let x = grid(3, 3);
    let t = [v(&x, &[0, 0, 0]), v(&x, &[2, 0, 0]), v(&x, &[0, 2, 0]), v(&x, &[0, 0, 2])];
    let mut p = PiecewiseMinimizing::new(2);
    for i in 0..4 {
        let mut face = t.to_vec();
        face.remove(i);
        p.add(&face, if i % 2 == 0 { 1 } else { -1 });
    }
    assert!(p.is_formal_cycle());
    let mut b = SimplexBuilder::new(&x, MinFillOptions::default());
    let f = fill_piecewise_minimizing(&mut b, &p, t[0]).unwrap();
    assert_eq!(f.chain.boundary(&x), p.realize(&mut b).unwrap().0);
    assert_eq!(f.l1, 4);
    assert!(f.ratio.is_finite());
    let mut open = PiecewiseMinimizing::new(2);
    open.add(&t[..3], 1);
    assert!(matches!(
        fill_piecewise_minimizing(&mut b, &open, t[0]),
        Err(Error::NotABoundary { .. })
    ));
}

#[test]
fn density_of_a_block_matches_a_lattice_count() {
    let x = grid(2, 8);
    let blk = block(&x, &[0, 0], &[4, 4]);
    let radii: Vec<Q> = (1..=6).map(qi).collect();
    let prof = density_profile(&x, &blk, v(&x, &[0, 0]), &radii).unwrap();
    for (j, r) in (1..=6).enumerate() {
        let r = r as f64;
        let mut count = 0.0;
        for i in 0..4 {
            for k in 0..4 {
                let (cx, cy) = (i as f64 + 0.5, k as f64 + 0.5);
                if cx * cx + cy * cy <= r * r + 1e-12 {
                    count += 1.0;
                }
            }
        }
        assert!((prof.ratios[j] - count / (r * r)).abs() < 1e-12, "r={r}");
    }
    let zero = density_profile(&x, &Chain::zero(2), v(&x, &[0, 0]), &radii).unwrap();
    assert!(zero.ratios.iter().all(|&r| r == 0.0));
    assert!(density_profile(&x, &blk, v(&x, &[0, 0]), &[qi(2), qi(1)]).is_err());
}

#[test]
fn loops_are_round_and_fill_euclideanly() {
    let x = grid(2, 10);
    let t = path_loop(&x, &[&[1, 1], &[7, 1], &[7, 4], &[1, 4]]);
    let d = round_decompose(&x, &t, &RoundParams::default()).unwrap();
    assert_eq!(d.pieces, vec![t.clone()]);
    assert!(d.residual.is_zero());
    let f = euclidean_filling(&x, &t).unwrap();
    assert_eq!(f.chain.boundary(&x), t);
    assert_eq!(f.chain.mass(&x), qi(18));
}

#[test]
fn long_tube_splits_into_round_pieces() {
    let x = grid(3, 21);
    let t = block(&x, &[0, 0, 0], &[20, 1, 1]).boundary(&x);
    let p = RoundParams {
        beta: 2.0,
        ..RoundParams::default()
    };
    let d = round_decompose(&x, &t, &p).unwrap();
    assert!(d.pieces.len() > 1);
    assert!(d.clauses.violations(&p).is_empty());
    let f = euclidean_filling_with(&x, &t, &p).unwrap();
    assert_eq!(f.chain.boundary(&x), t);
}

#[test]
fn zero_dimensional_cycles_are_coned() {
    let x = grid(2, 5);
    let t = &Chain::cell(0, v(&x, &[4, 4]), 1) - &Chain::cell(0, v(&x, &[1, 0]), 1);
    let f = euclidean_filling(&x, &t).unwrap();
    assert_eq!(f.chain.mass(&x), qi(7));
    assert!(round_decompose(&x, &t, &RoundParams::default()).is_err());
}
