use super::*;
use crate::numeric::{q_pow, qi, qr};
use num_traits::One;
use proptest::prelude::*;

fn grid(n: usize, extent: usize) -> MetricComplex {
    MetricComplex::build_grid(n, extent, qi(1)).unwrap()
}

fn cube_boundary(x: &MetricComplex, lo: u32, m: u32) -> Chain {
    let n = x.product().unwrap().num_factors();
    families::box_chain(x, &vec![lo; n], &vec![lo + m; n]).unwrap().boundary(x)
}

#[test]
fn ladder_on_perfect_powers_is_exact() {
    let l = ScaleLadder::new(&qi(16), 2, &qr(1, 4)).unwrap();
    assert_eq!(l.scales, vec![qi(4), qi(2)]);
    let l = ScaleLadder::new(&qi(256), 1, &qr(1, 4)).unwrap();
    assert_eq!(l.scales, vec![qi(256), qi(64), qi(16), qi(4)]);
    assert_eq!(l.len(), 3);
}

#[test]
fn ladder_rejects_bad_inputs() {
    assert!(ScaleLadder::new(&qi(100), 2, &qr(1, 2)).is_err());
    assert!(ScaleLadder::new(&qi(100), 2, &qi(0)).is_err());
    assert!(ScaleLadder::new(&qi(1), 2, &qr(1, 4)).is_err());
    assert!(ScaleLadder::new(&qi(100), 0, &qr(1, 4)).is_err());
}

#[test]
fn power_above_is_the_least_dyadic_upper_bound() {
    let step = Q::new(1.into(), num_bigint::BigInt::one() << 20);
    let s = power_above(&qi(2), &qr(1, 2));
    assert!(q_pow(&s, 2) >= qi(2));
    assert!(q_pow(&(&s - &step), 2) < qi(2));
    assert_eq!(power_above(&qi(27), &qr(2, 3)), qi(9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn ladder_invariants_hold(mass in 2u64..2_000_000, den in 1u64..1000, k in 1usize..=2, q in 3i64..9) {
        let m = Q::new(mass.into(), den.into()) + qi(1);
        let delta = qr(1, q);
        if &delta * qi(k as i64) >= qi(1) {
            return Ok(());
        }
        let l = ScaleLadder::new(&m, k, &delta).unwrap();
        l.check().unwrap();
        // s_0 >= M^(1/k) and s_l >= M^delta exactly
        prop_assert!(q_pow(&l.scales[0], k as u32) >= m);
        prop_assert!(q_pow(&l.scales[l.len()], q as u32) >= m);
        prop_assert!(l.len() as f64 * k as f64 / (q as f64) < 1.0 || l.len() == 1);
    }
}

#[test]
fn small_cycles_take_the_euclidean_branch() {
    let x = grid(3, 3);
    let t = cube_boundary(&x, 1, 1);
    let cfg = FillConfig::new(&x, qr(1, 4));
    assert_eq!(cfg.small_mass_threshold(&x), 81.0);
    let f = fill_round(&x, &t, &cfg).unwrap();
    assert_eq!(f.method, FillMethod::Euclidean);
    assert_eq!(f.chain.boundary(&x), t);
    assert_eq!(f.mass, 1.0);
    assert!(f.rungs.is_empty() && f.ladder.is_none());
    let z = fill_round(&x, &Chain::zero(2), &cfg).unwrap();
    assert_eq!(z.method, FillMethod::Zero);
}

#[test]
fn one_rung_ladder_on_a_large_loop() {
    let x = grid(2, 22);
    let t = cube_boundary(&x, 1, 20);
    let cfg = FillConfig::new(&x, qr(1, 2));
    let f = fill_round(&x, &t, &cfg).unwrap();
    assert_eq!(f.method, FillMethod::Ladder);
    assert_eq!(f.chain.boundary(&x), t);
    let l = f.ladder.as_ref().unwrap();
    assert_eq!(l.len(), 1);
    assert_eq!(f.rungs.len(), 1);
    assert!(f.rungs[0].l1 > 0, "{:?}", f.rungs);
    assert!(f.rungs[0].within_bound);
}

#[test]
fn delta_outside_the_range_is_rejected() {
    let x = grid(3, 3);
    let t = cube_boundary(&x, 1, 1);
    assert!(fill_round(&x, &t, &FillConfig::new(&x, qr(1, 2))).is_err());
    assert!(fill_cycle(&x, &t, &FillConfig::new(&x, qi(0))).is_err());
}

#[test]
fn cycle_filling_bounds_mixed_cycles() {
    let family = Family::Grid3Mixed {
        extent: 10,
        count: 6,
        seed: 3,
    };
    let (instances, _) = family.generate().unwrap();
    assert!(!instances.is_empty());
    for inst in instances {
        let x = &inst.complex;
        let cfg = FillConfig::new(x, qr(1, 4));
        let f = fill_cycle(x, &inst.cycle, &cfg).unwrap();
        assert_eq!(f.chain.boundary(x), inst.cycle);
        assert!(!f.ledger.is_empty());
        assert!(f.mass >= crate::fill::min_filling(x, &inst.cycle, &Default::default()).unwrap().chain.mass_f64(x));
    }
}

#[test]
fn round_cycle_needs_one_iteration() {
    let x = grid(3, 8);
    let t = cube_boundary(&x, 1, 5);
    let f = fill_cycle(&x, &t, &FillConfig::new(&x, qr(1, 4))).unwrap();
    assert_eq!(f.ledger.len(), 1);
    assert_eq!(f.ledger[0].mass_residual, 0.0);
    assert_eq!(f.rounds.len(), 1);
    assert_eq!(f.method_tag(), "ladder");
    assert_eq!(f.chain.boundary(&x), t);
}

#[test]
fn sphere_family_oracle_has_slope_three_halves() {
    let family = Family::parse("grid3_spheres", "m=2..6").unwrap();
    let opts = ExperimentOptions {
        fill_cycle: false,
        ..ExperimentOptions::default()
    };
    let rep = experiment_exponent(&family, &opts).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    assert_eq!(rep.rows.len(), 5);
    for (row, m) in rep.rows.iter().zip(2..) {
        assert_eq!(row.mass_t, 6.0 * (m * m) as f64);
        assert_eq!(row.fill_mass, (m * m * m) as f64);
    }
    let fit = rep.fit("min_filling").unwrap();
    assert!((fit.slope - 1.5).abs() < 1e-9, "{fit:?}");
    assert!((fit.r2 - 1.0).abs() < 1e-9);
    assert!(rep.to_csv().starts_with("instance_id,k,mass_T,fill_mass,method,delta,runtime_ms\n"));
}

#[test]
fn empty_family_is_an_error() {
    let family = Family::Grid3Spheres { m_min: 4, m_max: 3 };
    let err = experiment_exponent(&family, &ExperimentOptions::default()).unwrap_err();
    assert!(err.to_string().contains("no instances"));
}

#[test]
fn family_parsing() {
    assert_eq!(
        Family::parse("grid2_loops", "m=3..9").unwrap(),
        Family::Grid2Loops { m_min: 3, m_max: 9 }
    );
    assert_eq!(
        Family::parse("treeprod_cycles", "depth=4,count=5,seed=9").unwrap(),
        Family::TreeprodCycles {
            depth: 4,
            count: 5,
            seed: 9
        }
    );
    assert!(Family::parse("spheres", "").is_err());
    assert!(Family::parse("grid3_spheres", "m").is_err());
    assert!(Family::parse("grid3_mixed", "count=x").is_err());
}

#[test]
fn tree_polygons_are_one_cycles() {
    let family = Family::TreeprodCycles {
        depth: 3,
        count: 8,
        seed: 2,
    };
    let (instances, skipped) = family.generate().unwrap();
    assert_eq!(instances.len() + skipped.len(), 8);
    for inst in &instances {
        assert_eq!(inst.k(), 1);
        assert!(inst.cycle.is_cycle(&inst.complex));
    }
}

#[test]
fn box_chain_masses() {
    let x = grid(3, 6);
    let b = families::box_chain(&x, &[0, 1, 2], &[2, 4, 3]).unwrap();
    assert_eq!(b.len(), 6);
    assert_eq!(b.boundary(&x).mass(&x), qi(2 * (6 + 2 + 3)));
    assert!(families::box_chain(&x, &[0, 0, 0], &[7, 1, 1]).is_err());
    assert!(families::box_chain(&x, &[0, 0], &[1, 1]).is_err());
}

#[test]
fn loglog_fit_recovers_power_laws() {
    let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 3.0 * (i as f64).powf(1.25))).collect();
    let f = fit_loglog(&pts).unwrap();
    assert!((f.slope - 1.25).abs() < 1e-12);
    assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    assert!(fit_loglog(&[(2.0, 1.0)]).is_none());
    assert!(fit_loglog(&[(2.0, 1.0), (2.0, 3.0)]).is_none());
}

#[test]
fn bundled_constants_parse_and_round_trip() {
    for fam in ["grid2", "grid3", "treeprod"] {
        let c = Constants::bundled(fam).unwrap();
        assert_eq!(c.family, fam);
        let back = Constants::from_json(&c.to_json()).unwrap();
        assert_eq!(back.to_json(), c.to_json());
        assert!(c.mu > 0.0 && c.c_prime > 0.0);
    }
    assert!(Constants::bundled("hyperbolic").is_none());
    assert_eq!(Constants::family_of(&grid(2, 2)), "grid2");
}

#[test]
fn calibration_produces_positive_constants() {
    let x = grid(2, 10);
    let opts = CalibrationOptions {
        samples: 4,
        ..CalibrationOptions::default()
    };
    let c = calibrate(&x, &opts).unwrap();
    assert_eq!(c.family, "grid2");
    assert!(c.kappa_cone > 0.0 && c.gamma1 > 0.0 && c.c_prime > 0.0);
    assert!(c.b_meas >= c.l1_meas && c.b_meas >= c.bridge_meas);
}
