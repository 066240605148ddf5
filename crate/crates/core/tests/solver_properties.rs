//! Property suites for the closed-form simplex solver, checked against the
//! exhaustive grid oracle.

use otca_core::moca::{
    brute_force_oracle, exploration_lambda, moca_solve, objective, AdvantageVector,
};
use otca_core::numerics::SeededRng;

fn random_advantages(rng: &mut SeededRng, k: usize) -> AdvantageVector {
    AdvantageVector::new((0..k).map(|_| rng.next_f64() * 6.0 - 3.0).collect()).unwrap()
}

#[test]
fn solver_beats_grid_oracle_on_random_instances() {
    let mut rng = SeededRng::new(1001);
    let start = std::time::Instant::now();
    for trial in 0..10_000 {
        let k = 2 + trial % 3; // K in {2, 3, 4}
        let a = random_advantages(&mut rng, k);
        let lambda = rng.next_f64();
        let c = moca_solve(&a, lambda, 1e-8).unwrap();

        // Simplex feasibility.
        let sum: f64 = c.values().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "trial {trial}: sum {sum}");
        assert!(
            c.values().iter().all(|v| *v >= 0.0),
            "trial {trial}: negative coefficient"
        );

        // Optimality against the exhaustive grid.
        let (_, oracle_obj) = brute_force_oracle(&a, lambda, 1e-4);
        let solver_obj = objective(&c, &a, lambda);
        assert!(
            solver_obj <= oracle_obj + 1e-6,
            "trial {trial}: solver {solver_obj} vs oracle {oracle_obj}"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "oracle sweep took {elapsed:?}, budget is 30 s"
    );
}

#[test]
fn lambda_zero_reduction_to_min_norm() {
    // Pure minimum-norm fusion: the fused value is 0 clipped into the
    // advantage range.
    let mut rng = SeededRng::new(1002);
    for trial in 0..1_000 {
        let k = 2 + trial % 3;
        let a = random_advantages(&mut rng, k);
        let c = moca_solve(&a, 0.0, 1e-8).unwrap();
        let lo = a.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = a.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expect = 0.0f64.clamp(lo, hi);
        let fused = c.fuse(&a);
        assert!(
            (fused - expect).abs() < 1e-10,
            "trial {trial}: fused {fused} vs clip(0) {expect}"
        );
    }
}

#[test]
fn interpolation_case_hits_target_exactly() {
    let mut rng = SeededRng::new(1003);
    let mut exercised = 0;
    for _ in 0..2_000 {
        let k = 2 + rng.next_index(3);
        let a = random_advantages(&mut rng, k);
        let lambda = rng.next_f64();
        let lo = a.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = a.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z_hat = (lambda / 2.0).clamp(lo, hi);
        // Only interpolation-case instances pin the fused value exactly.
        if a.values().iter().any(|v| (v - z_hat).abs() < 1e-8) {
            continue;
        }
        exercised += 1;
        let c = moca_solve(&a, lambda, 1e-8).unwrap();
        assert!(
            (c.fuse(&a) - z_hat).abs() < 1e-12,
            "fused {} vs target {z_hat}",
            c.fuse(&a)
        );
        let nonzero = c.values().iter().filter(|v| **v > 0.0).count();
        assert!(nonzero <= 2, "interpolation must touch at most two entries");
    }
    assert!(exercised > 1_000, "case 3 barely exercised: {exercised}");
}

#[test]
fn exploration_shifts_fused_value_toward_positive() {
    // With conflicting advantages the min-norm point is 0; a positive
    // lambda moves the fused value to min(λ/2, max A).
    let a = AdvantageVector::new(vec![-2.0, 0.4, 1.0]).unwrap();
    let c0 = moca_solve(&a, 0.0, 1e-8).unwrap();
    assert!(c0.fuse(&a).abs() < 1e-12);
    let c = moca_solve(&a, 0.8, 1e-8).unwrap();
    assert!((c.fuse(&a) - 0.4).abs() < 1e-12);
    let c = moca_solve(&a, 5.0, 1e-8).unwrap();
    assert!((c.fuse(&a) - 1.0).abs() < 1e-12, "clips to max A");
}

#[test]
fn lambda_modulation_bounds_hold_under_random_inputs() {
    let mut rng = SeededRng::new(1004);
    for _ in 0..5_000 {
        let k = 1 + rng.next_index(4);
        let a = random_advantages(&mut rng, k);
        let e = rng.next_f64() * 10.0;
        let lambda = exploration_lambda(&a, e, 1e-6).unwrap();
        assert!((0.0..1.0).contains(&lambda));
        if a.sum() <= 0.0 {
            assert_eq!(lambda, 0.0);
        }
        if a.sum() > 0.0 {
            assert!(lambda <= e.tanh());
        }
    }
}
