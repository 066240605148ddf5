//! Golden trace of one full credit-assignment step on a hand-built
//! G=2, K=2, T=2 group.
//!
//! Every expected value below was produced by an independent step-by-step
//! execution of the pipeline with a calculator script: cosine profiles,
//! alignment gains, temporal weights (ε = 0.05), group exploration signal
//! (ε = 1e-6), lambda modulation, the closed-form solver, and the final
//! effective advantages.

use otca_core::flow::{Rollout, SampledStep};
use otca_core::grpo::{otca_step, OtcaConfig, SampleGroup};
use otca_core::tcd::LatentTrajectory;

/// Build a rollout whose recorded steps are consistent with the given state
/// sequence (zero action noise, fixed std, peak-density log-density).
fn synthetic_rollout(states: Vec<Vec<f64>>, cond: usize) -> Rollout {
    let n = states.len();
    let times: Vec<f64> = (0..n)
        .map(|j| (n - 1 - j) as f64 / (n - 1) as f64)
        .collect();
    let std = 0.1;
    let d = states[0].len();
    let logp = -(d as f64 / 2.0) * (std::f64::consts::TAU * std * std).ln();
    let steps = (0..n - 1)
        .map(|j| SampledStep {
            t: times[j],
            dt: times[j] - times[j + 1],
            state_before: states[j].clone(),
            state_after: states[j + 1].clone(),
            action_noise: vec![0.0; d],
            mean: states[j + 1].clone(),
            std,
            log_density: Some(logp),
        })
        .collect();
    Rollout {
        latent: LatentTrajectory::new(states, times).unwrap(),
        steps,
        cond,
    }
}

fn golden_group(rewards: Vec<Vec<f64>>) -> SampleGroup {
    let traj1 = synthetic_rollout(
        vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 0.0]],
        0,
    );
    let traj2 = synthetic_rollout(
        vec![vec![1.0, 1.0], vec![0.2, 0.9], vec![0.0, 1.0]],
        0,
    );
    SampleGroup::new(vec![traj1, traj2], rewards).unwrap()
}

fn config() -> OtcaConfig {
    OtcaConfig {
        tcd_eps: 0.05,
        moca_tol: 1e-8,
        explore_eps: 1e-6,
        w_min: 0.0,
        uniform_w: false,
        uniform_c: false,
        exploration: true,
    }
}

const TOL: f64 = 1e-12;

fn assert_close(got: f64, want: f64, what: &str) {
    assert!(
        (got - want).abs() < TOL,
        "{what}: got {got}, expected {want}"
    );
}

#[test]
fn golden_trace_one_hot_instance() {
    // Rewards [[3,2],[1,1]] normalize to A¹ = (1,1), A² = (-1,-1): both
    // samples hit the equal-advantages one-hot case; only sample 1 earns a
    // positive exploration bias.
    let group = golden_group(vec![vec![3.0, 2.0], vec![1.0, 1.0]]);
    let (eff, diag) = otca_step(&group, &config()).unwrap();

    let d1 = &diag.samples[0];
    let d2 = &diag.samples[1];
    assert_close(d1.q, 0.5779876705699135, "q of sample 1");
    assert_close(d2.q, 0.22300184730415823, "q of sample 2");
    assert_close(d1.e, 3.2563802625827725, "e of sample 1");
    assert_close(d2.e, 1.2563915305749058, "e of sample 2");
    assert_close(d1.lambda, 0.997035148890286, "lambda of sample 1");
    assert_close(d2.lambda, 0.0, "lambda of sample 2 (negative sum)");
    assert_eq!(d1.coefficients, vec![1.0, 0.0]);
    assert_eq!(d2.coefficients, vec![1.0, 0.0]);
    assert_close(d1.weight_entropy, 0.6204708389007298, "entropy of sample 1");
    assert_close(d2.weight_entropy, 0.48311999911600084, "entropy of sample 2");

    // Effective advantages are the temporal weights times the fused ±1.
    let want_row1 = [0.6882788919877704, 0.3117211080122295];
    let want_row2 = [-0.81212976890015, -0.18787023109985002];
    for t in 0..2 {
        assert_close(eff.values()[0][t], want_row1[t], "row 1");
        assert_close(eff.values()[1][t], want_row2[t], "row 2");
    }
}

#[test]
fn golden_trace_interpolation_instance() {
    // Rewards [[3,1],[1,2]] normalize to A¹ = (1,-1), A² = (-1,1): both
    // samples have zero advantage sum, so lambda stays 0, the target clips
    // to 0, and the solver interpolates to (0.5, 0.5) with a fused value of
    // exactly zero.
    let group = golden_group(vec![vec![3.0, 1.0], vec![1.0, 2.0]]);
    let (eff, diag) = otca_step(&group, &config()).unwrap();

    for d in &diag.samples {
        assert_eq!(d.lambda, 0.0);
        assert_close(d.coefficients[0], 0.5, "interpolated coefficient");
        assert_close(d.coefficients[1], 0.5, "interpolated coefficient");
    }
    // Same trajectories as the other instance, so q/e are unchanged.
    assert_close(diag.samples[0].q, 0.5779876705699135, "q of sample 1");
    assert_close(diag.samples[1].e, 1.2563915305749058, "e of sample 2");

    for row in eff.values() {
        for v in row {
            assert!(v.abs() < TOL, "fused zero advantage must broadcast zeros");
        }
    }
}

#[test]
fn golden_trace_uniform_bypass() {
    // Same group, both bypass flags on: every timestep receives the plain
    // mean of the normalized advantages, here ±1.
    let group = golden_group(vec![vec![3.0, 2.0], vec![1.0, 1.0]]);
    let cfg = OtcaConfig {
        uniform_w: true,
        uniform_c: true,
        ..config()
    };
    let (eff, _) = otca_step(&group, &cfg).unwrap();
    for t in 0..2 {
        assert_close(eff.values()[0][t], 1.0, "uniform broadcast row 1");
        assert_close(eff.values()[1][t], -1.0, "uniform broadcast row 2");
    }
}
