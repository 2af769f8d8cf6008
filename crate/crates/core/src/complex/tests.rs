use super::*;
use crate::numeric::{qi, qr};

fn counts(x: &MetricComplex) -> Vec<usize> {
    (0..=x.max_dim()).map(|d| x.count_of_dim(d)).collect()
}

#[test]
fn grid_cell_counts() {
    let x = MetricComplex::build_grid(3, 2, qi(1)).unwrap();
    assert_eq!(counts(&x), vec![27, 54, 36, 8]);
    let x = MetricComplex::build_grid(2, 3, qr(1, 2)).unwrap();
    assert_eq!(counts(&x), vec![16, 24, 9]);
    assert_eq!(x.volume(x.cells_of_dim(2).next().unwrap()), &qr(1, 4));
}

#[test]
fn grid_rejects_bad_parameters() {
    assert!(MetricComplex::build_grid(5, 2, qi(1)).is_err());
    assert!(MetricComplex::build_grid(2, 2, qi(0)).is_err());
    assert!(matches!(
        MetricComplex::build_grid_with_budget(3, 100, qi(1), 1000),
        Err(Error::Budget { .. })
    ));
}

#[test]
fn tree_product_counts() {
    let x = MetricComplex::build_tree_product(2, 2, 1).unwrap();
    assert_eq!(counts(&x), vec![9, 12, 4]);
    let x = MetricComplex::build_tree_product(3, 3, 0).unwrap();
    assert_eq!(x.num_cells(), 1);
    assert_eq!(x.max_dim(), 0);
}

#[test]
fn boundary_of_boundary_vanishes_on_every_cell() {
    for x in [
        MetricComplex::build_grid(3, 2, qi(1)).unwrap(),
        MetricComplex::build_grid(4, 1, qi(1)).unwrap(),
        MetricComplex::build_tree_product(2, 3, 2).unwrap(),
    ] {
        for i in 0..x.num_cells() as u32 {
            let c = CellId(i);
            let bb = Chain::cell(x.dim(c), c, 1).boundary(&x).boundary(&x);
            assert!(bb.is_zero(), "cell {c}");
        }
    }
}

#[test]
fn coboundary_is_transpose_of_boundary() {
    let x = MetricComplex::build_tree_product(2, 2, 2).unwrap();
    for i in 0..x.num_cells() as u32 {
        let c = CellId(i);
        for (f, s) in x.coboundary(c) {
            assert!(x.boundary(f).contains(&(c, s)));
        }
        for (f, s) in x.boundary(c) {
            assert!(x.coboundary(f).contains(&(c, s)));
        }
    }
}

fn grid_vertex(x: &MetricComplex, nodes: &[u32]) -> CellId {
    x.product().unwrap().vertex(nodes)
}

#[test]
fn grid_distances_are_euclidean() {
    let x = MetricComplex::build_grid(2, 5, qi(1)).unwrap();
    let a = grid_vertex(&x, &[0, 0]);
    let b = grid_vertex(&x, &[3, 4]);
    let d = x.distance(&Point::vertex(a), &Point::vertex(b)).unwrap();
    assert_eq!(d.exact_sq, Some(qi(25)));
    assert_eq!(d.value(), 5.0);
    assert_eq!(x.path_distance(a, b).unwrap(), qi(7));
    // A point in the middle of a square.
    let sq = x
        .cells_of_dim(2)
        .find(|&c| x.vertices(c)[0] == a)
        .unwrap();
    let mid = Point {
        cell: sq,
        coords: vec![qr(1, 2), qr(1, 2)],
    };
    assert_eq!(x.distance(&mid, &Point::vertex(a)).unwrap().exact_sq, Some(qr(1, 2)));
}

#[test]
fn tree_product_distance_is_l2_of_tree_distances() {
    let x = MetricComplex::build_tree_product(2, 2, 2).unwrap();
    let p = x.product().unwrap();
    let u = p.vertex(&[3, 0]);
    let v = p.vertex(&[6, 4]);
    // Tree distances: 3 -> 6 is 4, 0 -> 4 is 2.
    assert_eq!(x.vertex_dist_sq(u, v), Some(qi(20)));
    assert_eq!(x.path_distance(u, v).unwrap(), qi(6));
}

#[test]
fn geodesic_path_is_shortest_and_lexicographic() {
    let x = MetricComplex::build_grid(2, 3, qi(1)).unwrap();
    let a = grid_vertex(&x, &[0, 0]);
    let b = grid_vertex(&x, &[2, 1]);
    let path = x.geodesic_path(a, b).unwrap();
    assert_eq!(path.mass(&x), qi(3));
    assert_eq!(path.boundary(&x), &Chain::cell(0, b, 1) - &Chain::cell(0, a, 1));
    assert_eq!(path, x.geodesic_path(a, b).unwrap());
    let back = x.geodesic_path(b, a).unwrap();
    assert_eq!(back.boundary(&x), &Chain::cell(0, a, 1) - &Chain::cell(0, b, 1));
    assert!(x.geodesic_path(a, a).unwrap().is_zero());
}

#[test]
fn tree_product_geodesics() {
    let x = MetricComplex::build_tree_product(3, 3, 3).unwrap();
    let p = x.product().unwrap();
    let a = p.vertex(&[13, 2]);
    let b = p.vertex(&[39, 20]);
    let path = x.geodesic_path(a, b).unwrap();
    assert_eq!(path.mass(&x), x.path_distance(a, b).unwrap());
    assert_eq!(path.boundary(&x), &Chain::cell(0, b, 1) - &Chain::cell(0, a, 1));
}

#[test]
fn neighborhood_of_a_square() {
    let x = MetricComplex::build_grid(2, 5, qi(1)).unwrap();
    let base = grid_vertex(&x, &[2, 2]);
    let sq = x.cells_of_dim(2).find(|&c| x.vertices(c)[0] == base).unwrap();
    let input: CellSet = [sq].into_iter().collect();
    let n0 = x.neighborhood(&input, &qi(0));
    assert_eq!(n0.len(), 9);
    let n1 = x.neighborhood(&input, &qi(1));
    let squares: Vec<CellId> = n1.iter().copied().filter(|&c| x.dim(c) == 2).collect();
    assert_eq!(squares.len(), 9);
    for s in squares {
        let v = x.product().unwrap().vertex_nodes(x.vertices(s)[0]);
        assert!((1..=3).contains(&v[0]) && (1..=3).contains(&v[1]));
    }
    assert!(n0.is_subset(&n1));
    let n2 = x.neighborhood(&input, &qi(2));
    assert!(n1.is_subset(&n2));
    let all = x.neighborhood(&input, &qi(100));
    assert_eq!(all.len(), x.num_cells());
}

pub(crate) const UNIT_SQUARE_JSON: &str = r#"{
  "cells": [
    {"id": 0, "dim": 0, "volume": 1, "boundary": []},
    {"id": 1, "dim": 0, "volume": 1, "boundary": []},
    {"id": 2, "dim": 0, "volume": 1, "boundary": []},
    {"id": 3, "dim": 0, "volume": 1, "boundary": []},
    {"id": 4, "dim": 1, "volume": 1, "boundary": [[1, 1], [0, -1]]},
    {"id": 5, "dim": 1, "volume": 1, "boundary": [[3, 1], [2, -1]]},
    {"id": 6, "dim": 1, "volume": 0.5, "boundary": [[2, 1], [0, -1]]},
    {"id": 7, "dim": 1, "volume": 0.5, "boundary": [[3, 1], [1, -1]]},
    {"id": 8, "dim": 2, "volume": 0.5, "boundary": [[4, 1], [7, 1], [5, -1], [6, -1]]}
  ],
  "metric": {"kind": "custom_cube", "kappa": 1.5}
}"#;

#[test]
fn custom_square_loads() {
    let x = MetricComplex::from_custom_json(UNIT_SQUARE_JSON).unwrap();
    assert_eq!(x.kind(), &MetricKind::CustomCube);
    assert_eq!(x.volume(CellId(6)), &qr(1, 2));
    assert_eq!(x.path_distance(CellId(0), CellId(3)).unwrap(), qr(3, 2));
    let d = x.distance(&Point::vertex(CellId(0)), &Point::vertex(CellId(3))).unwrap();
    assert_eq!(d.upper, 1.5);
    assert!((d.lower - 1.0).abs() < 1e-12);
    let path = x.geodesic_path(CellId(0), CellId(3)).unwrap();
    assert_eq!(path.mass(&x), qr(3, 2));
    // Two shortest paths (4 then 7, or 6 then 5); the smaller edge id comes first.
    assert_eq!(path.coeff(CellId(4)), 1);
}

#[test]
fn custom_rejects_non_cat0_link() {
    // Three squares around a corner of a cube without the solid cube: the link
    // at the corner is an empty triangle.
    let mut cells = Vec::new();
    let mut id = 0u32;
    let mut vid = std::collections::HashMap::new();
    for b in 0..8u32 {
        vid.insert(b, id);
        cells.push(format!(r#"{{"id": {id}, "dim": 0, "volume": 1, "boundary": []}}"#));
        id += 1;
    }
    let mut eid = std::collections::HashMap::new();
    for b in 0..8u32 {
        for axis in 0..3 {
            if b >> axis & 1 == 0 {
                let c = b | 1 << axis;
                eid.insert((b, axis), id);
                cells.push(format!(
                    r#"{{"id": {id}, "dim": 1, "volume": 1, "boundary": [[{}, 1], [{}, -1]]}}"#,
                    vid[&c], vid[&b]
                ));
                id += 1;
            }
        }
    }
    // Squares at the origin corner spanned by axis pairs (i, j).
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let b = 0u32;
        let e_i0 = eid[&(b, i)];
        let e_i1 = eid[&(b | 1 << j, i)];
        let e_j0 = eid[&(b, j)];
        let e_j1 = eid[&(b | 1 << i, j)];
        cells.push(format!(
            r#"{{"id": {id}, "dim": 2, "volume": 1, "boundary": [[{e_j1}, 1], [{e_j0}, -1], [{e_i1}, -1], [{e_i0}, 1]]}}"#
        ));
        id += 1;
    }
    let json = format!(
        r#"{{"cells": [{}], "metric": {{"kind": "custom_cube", "kappa": 2}}}}"#,
        cells.join(",")
    );
    let err = MetricComplex::from_custom_json(&json).unwrap_err();
    assert!(err.to_string().contains("not flag"), "{err}");
}

#[test]
fn custom_rejects_bad_ids_and_kinds() {
    let bad = UNIT_SQUARE_JSON.replace("\"id\": 8", "\"id\": 9");
    assert!(MetricComplex::from_custom_json(&bad).is_err());
    let bad = UNIT_SQUARE_JSON.replace("custom_cube", "grid");
    assert!(MetricComplex::from_custom_json(&bad).is_err());
}
