//! Runner-level contracts: evaluation-only runs, ablation table edge cases,
//! record invariants, and the divergence abort path.

use otca_harness::ablate::compare_variants;
use otca_harness::config::{ExperimentConfig, PretrainSection, Variant};
use otca_harness::error::HarnessError;
use otca_harness::metrics::read_log;
use otca_harness::runner::run_experiment;

fn quick_config() -> ExperimentConfig {
    ExperimentConfig {
        iterations: 3,
        group_size: 4,
        groups_per_iter: 2,
        pretrain: PretrainSection {
            steps: 200,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn zero_iterations_logs_single_evaluation_and_keeps_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick_config();
    config.iterations = 0;
    let artifacts = run_experiment(&config, dir.path(), None).unwrap();
    let records = read_log(&artifacts.metrics_path).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].iteration, 0);

    // The saved policy equals the pretrained flow parameter for parameter.
    let (flow, _) = otca_core::flow::load_checkpoint(&dir.path().join("flow.ckpt")).unwrap();
    let (policy, _) = otca_core::flow::load_checkpoint(&artifacts.policy_path).unwrap();
    for (a, b) in flow.params().iter().zip(policy.params()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn records_keep_coefficients_on_the_simplex() {
    let dir = tempfile::tempdir().unwrap();
    let artifacts = run_experiment(&quick_config(), dir.path(), None).unwrap();
    for record in read_log(&artifacts.metrics_path).unwrap() {
        let sum: f64 = record.coeff_mean.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "record {}: {sum}", record.iteration);
        assert!(record.coeff_mean.iter().all(|c| *c >= 0.0));
    }
}

#[test]
fn single_variant_single_seed_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config().with_variant(Variant::Tcd);
    let table = compare_variants(&[config], dir.path()).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].variant, "tcd");
    assert_eq!(table.rows[0].n_seeds, 1);
    assert_eq!(table.rows[0].per_seed_aggregate.len(), 1);
    let text = table.render_text();
    assert!(text.contains("tcd"));
    assert!(text.contains("aggregate"));
}

#[test]
fn duplicate_variant_rows_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config().with_variant(Variant::Baseline);
    let table = compare_variants(&[config.clone(), config], dir.path()).unwrap();
    assert_eq!(table.rows.len(), 1);
    let row = &table.rows[0];
    assert_eq!(row.n_seeds, 2);
    assert_eq!(row.per_seed_aggregate[0], row.per_seed_aggregate[1]);
    assert_eq!(row.aggregate_std, 0.0);
}

#[test]
fn mismatched_base_configs_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = quick_config();
    let mut b = quick_config().with_variant(Variant::Baseline);
    b.schedule.eta = 0.5; // differs beyond flags and seed
    let err = compare_variants(&[a, b], dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)));
    assert!(err.to_string().contains("differs"));
}

#[test]
fn divergent_training_aborts_with_last_good_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick_config();
    config.train.lr = 1e160; // blow the states past the finite range
    config.iterations = 50;
    let err = run_experiment(&config, dir.path(), None).unwrap_err();
    assert_eq!(err.exit_code(), 2, "numerical failure must map to exit 2");
    // The rescue checkpoint holds finite parameters.
    let path = dir.path().join(format!("policy-{}.ckpt", config.run_label()));
    assert!(path.exists(), "last-good checkpoint missing");
    let (net, _) = otca_core::flow::load_checkpoint(&path).unwrap();
    assert!(net.params().iter().all(|p| p.is_finite()));
}
