//! Pretraining and the policy-gradient training loop.
//!
//! One iteration: snapshot the policy, sample `groups_per_iter` groups of
//! `G` trajectories each under the snapshot (conditions cycle through the
//! mixture labels, one shared initial noise per group by default), score
//! final states under the reward suite, run the credit-assignment step per
//! group, accumulate the surrogate gradient across groups in a fixed order,
//! and take one Adam ascent step. Record `0` is an evaluation of the
//! pretrained policy; record `i` reflects the policy after `i - 1` updates.
//!
//! The loop is single-threaded and seeded throughout, so identical configs
//! produce byte-identical metrics logs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use otca_core::flow::{
    flow_pretrain, load_checkpoint, save_checkpoint, sde_sample, Adam, NoiseSchedule,
    PretrainConfig, Rollout, VelocityNet,
};
use otca_core::grpo::{otca_step, surrogate_gradient, SampleGroup};
use otca_core::numerics::SeededRng;
use otca_core::proxy::{proxy_report, AggregateRule, ProxyReport};
use otca_core::rewards::{evaluate_all, RewardSpec};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::metrics::{write_log, MetricsRecord};

// Seed-fork tags of the independent random streams.
const FORK_NET_INIT: u64 = 1;
const FORK_DATASET: u64 = 2;
const FORK_PRETRAIN: u64 = 3;
const FORK_TRAIN: u64 = 4;
const FORK_PROXY: u64 = 5;

#[derive(Debug)]
pub struct RunArtifacts {
    pub final_record: MetricsRecord,
    pub metrics_path: PathBuf,
    pub policy_path: PathBuf,
}

/// Pretrain a flow model from the config's mixture; returns the model, its
/// schedule, and the final validation loss.
pub fn pretrain_model(config: &ExperimentConfig) -> Result<(VelocityNet, NoiseSchedule, f64)> {
    let mixture = config.mixture()?;
    if mixture.dim() != config.d {
        return Err(HarnessError::Config(format!(
            "mixture dimension {} does not match d = {}",
            mixture.dim(),
            config.d
        )));
    }
    let root = SeededRng::new(config.seed);
    let mut net = VelocityNet::new(config.d, &config.network.hidden, &mut root.fork(FORK_NET_INIT));
    let dataset = mixture.sample_dataset(config.data.samples, &mut root.fork(FORK_DATASET));
    let loss = flow_pretrain(
        &dataset,
        &mut net,
        &PretrainConfig {
            steps: config.pretrain.steps,
            batch: config.pretrain.batch,
            lr: config.pretrain.lr,
            seed: root.fork(FORK_PRETRAIN).seed(),
        },
    )?;
    Ok((net, config.noise_schedule(), loss))
}

/// Load the pretraining checkpoint from `out_dir`, or pretrain and save one.
pub fn ensure_pretrained(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(VelocityNet, NoiseSchedule)> {
    let path = out_dir.join("flow.ckpt");
    if path.exists() {
        let (net, schedule) = load_checkpoint(&path)?;
        if net.dim() != config.d {
            return Err(HarnessError::Config(format!(
                "checkpoint {} has d = {}, config wants {}",
                path.display(),
                net.dim(),
                config.d
            )));
        }
        return Ok((net, schedule));
    }
    let (net, schedule, loss) = pretrain_model(config)?;
    std::fs::create_dir_all(out_dir)?;
    save_checkpoint(&path, &net, &schedule)?;
    println!(
        "pretrained flow model (loss {loss:.4}) -> {}",
        path.display()
    );
    Ok((net, schedule))
}

struct PreparedGroup {
    group: SampleGroup,
    eff: otca_core::grpo::EffectiveAdvantage,
    rewards_sum: Vec<f64>,
    n_samples: usize,
    lambda_sum: f64,
    coeff_sum: Vec<f64>,
    entropy_sum: f64,
}

/// Sample one group under the old policy and run the credit-assignment
/// step; the result is fixed data for every inner gradient epoch.
fn prepare_group(
    net: &VelocityNet,
    schedule: &NoiseSchedule,
    suite: &[RewardSpec],
    config: &ExperimentConfig,
    label: usize,
    rng: &SeededRng,
) -> Result<PreparedGroup> {
    let g = config.group_size;
    let t = config.schedule.steps;
    let d = config.d;
    let shared_init: Option<Vec<f64>> = if config.train.shared_init_noise {
        Some(rng.fork(0).normal_vec(d))
    } else {
        None
    };
    let mut rollouts: Vec<Rollout> = Vec::with_capacity(g);
    let mut rewards: Vec<Vec<f64>> = Vec::with_capacity(g);
    for i in 0..g {
        let z0 = match &shared_init {
            Some(z) => z.clone(),
            None => rng.fork(1000 + i as u64).normal_vec(d),
        };
        let rollout = sde_sample(net, schedule, &z0, t, label, &mut rng.fork(2000 + i as u64))?;
        rewards.push(evaluate_all(suite, rollout.final_state())?);
        rollouts.push(rollout);
    }
    let group = SampleGroup::new(rollouts, rewards)?;
    let (eff, diag) = otca_step(&group, &config.otca_config())?;

    let k = suite.len();
    let mut rewards_sum = vec![0.0; k];
    for row in group.rewards() {
        for (acc, r) in rewards_sum.iter_mut().zip(row) {
            *acc += r;
        }
    }
    let mut coeff_sum = vec![0.0; k];
    let mut lambda_sum = 0.0;
    let mut entropy_sum = 0.0;
    for s in &diag.samples {
        lambda_sum += s.lambda;
        entropy_sum += s.weight_entropy;
        for (acc, c) in coeff_sum.iter_mut().zip(&s.coefficients) {
            *acc += c;
        }
    }
    Ok(PreparedGroup {
        group,
        eff,
        rewards_sum,
        n_samples: g,
        lambda_sum,
        coeff_sum,
        entropy_sum,
    })
}

/// Full experiment: pretrain (or reuse `pretrained`), train, and write the
/// metrics log and final policy checkpoint into `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    pretrained: Option<(VelocityNet, NoiseSchedule)>,
) -> Result<RunArtifacts> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let (mut net, schedule) = match pretrained {
        Some(p) => p,
        None => ensure_pretrained(config, out_dir)?,
    };
    let suite = config.reward_suite()?;
    let mixture = config.mixture()?;
    let labels = mixture.label_count();
    let k = suite.len();

    let root = SeededRng::new(config.seed).fork(FORK_TRAIN);
    let mut opt = Adam::new(net.param_count(), config.train.lr);
    let mut records: Vec<MetricsRecord> = Vec::with_capacity(config.iterations + 1);
    let mut last_good = net.params().to_vec();

    let clip = config.clip_rule()?;
    for iter in 0..=config.iterations {
        let iter_rng = root.fork(iter as u64);
        // One full iteration: rollouts and credit assignment under the old
        // policy, then inner gradient epochs against the fixed rollouts
        // (after the first step the importance ratio drifts and the clip
        // bounds the update). The recorded surrogate is the first epoch's
        // on-policy value.
        let iteration = (|| -> Result<MetricsRecord> {
            let mut rewards_sum = vec![0.0; k];
            let mut coeff_sum = vec![0.0; k];
            let mut lambda_sum = 0.0;
            let mut entropy_sum = 0.0;
            let mut n_samples = 0usize;
            let mut groups = Vec::with_capacity(config.groups_per_iter);
            for g in 0..config.groups_per_iter {
                let label = g % labels;
                let prepared =
                    prepare_group(&net, &schedule, &suite, config, label, &iter_rng.fork(g as u64))?;
                for (acc, v) in rewards_sum.iter_mut().zip(&prepared.rewards_sum) {
                    *acc += v;
                }
                for (acc, v) in coeff_sum.iter_mut().zip(&prepared.coeff_sum) {
                    *acc += v;
                }
                lambda_sum += prepared.lambda_sum;
                entropy_sum += prepared.entropy_sum;
                n_samples += prepared.n_samples;
                groups.push(prepared);
            }

            let mut surrogate_sum = 0.0;
            let epochs = if iter < config.iterations {
                config.train.inner_epochs
            } else {
                1 // final record only evaluates
            };
            for epoch in 0..epochs {
                let mut grad_acc = vec![0.0; net.param_count()];
                let mut value_sum = 0.0;
                for prepared in &groups {
                    let (value, grad) =
                        surrogate_gradient(&prepared.group, &prepared.eff, &net, &schedule, &clip)?;
                    for (acc, v) in grad_acc.iter_mut().zip(&grad) {
                        *acc += v / config.groups_per_iter as f64;
                    }
                    value_sum += value;
                }
                if epoch == 0 {
                    surrogate_sum = value_sum;
                }
                if iter < config.iterations {
                    last_good.copy_from_slice(net.params());
                    let descent: Vec<f64> = grad_acc.iter().map(|g| -g).collect();
                    opt.step(net.params_mut(), &descent);
                }
            }

            let n = n_samples as f64;
            let reward_mean: Vec<f64> = rewards_sum.iter().map(|r| r / n).collect();
            Ok(MetricsRecord {
                iteration: iter,
                reward_aggregate: reward_mean.iter().sum::<f64>() / k as f64,
                reward_mean,
                surrogate: surrogate_sum / config.groups_per_iter as f64,
                lambda_mean: lambda_sum / n,
                coeff_mean: coeff_sum.iter().map(|c| c / n).collect(),
                weight_entropy_mean: entropy_sum / n,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        })();

        // Any numerical failure aborts the run but keeps the last good
        // parameters and the log written so far.
        let rescue = |records: &[MetricsRecord], why: String| -> Result<()> {
            let policy_path = out_dir.join(format!("policy-{}.ckpt", config.run_label()));
            let mut rescued = net.clone();
            rescued.params_mut().copy_from_slice(&last_good);
            save_checkpoint(&policy_path, &rescued, &schedule)?;
            write_log(
                &out_dir.join(format!("metrics-{}.jsonl", config.run_label())),
                records,
            )?;
            Err(HarnessError::Numeric(format!(
                "{why} at iteration {iter}; last good checkpoint kept at {}",
                policy_path.display()
            )))
        };
        let record = match iteration {
            Ok(record) => record,
            Err(HarnessError::Core(e)) => {
                rescue(&records, format!("numerical failure ({e})"))?;
                unreachable!("rescue always errors");
            }
            Err(other) => return Err(other),
        };
        if !record.surrogate.is_finite() || record.reward_mean.iter().any(|r| !r.is_finite()) {
            rescue(&records, "non-finite metrics".into())?;
        }
        records.push(record);
        if net.params().iter().any(|p| !p.is_finite()) {
            rescue(&records, "parameters diverged".into())?;
        }
    }

    let metrics_path = out_dir.join(format!("metrics-{}.jsonl", config.run_label()));
    write_log(&metrics_path, &records)?;
    let policy_path = out_dir.join(format!("policy-{}.ckpt", config.run_label()));
    save_checkpoint(&policy_path, &net, &schedule)?;
    Ok(RunArtifacts {
        final_record: records.last().expect("at least the evaluation record").clone(),
        metrics_path,
        policy_path,
    })
}

/// Sample trajectories from a model and produce the proxy-validation report.
pub fn proxy_eval(
    config: &ExperimentConfig,
    net: &VelocityNet,
    schedule: &NoiseSchedule,
) -> Result<ProxyReport> {
    let suite = config.reward_suite()?;
    let mixture = config.mixture()?;
    let labels = mixture.label_count();
    let rule = match config.proxy.aggregate.as_str() {
        "mean" => AggregateRule::Mean,
        idx => AggregateRule::Objective(idx.parse::<usize>().map_err(|_| {
            HarnessError::Config(format!("bad proxy.aggregate '{idx}'"))
        })?),
    };
    let root = SeededRng::new(config.seed).fork(FORK_PROXY);
    let mut rollouts = Vec::with_capacity(config.proxy.trajectories);
    for i in 0..config.proxy.trajectories {
        let rng = root.fork(i as u64);
        let z0 = rng.fork(0).normal_vec(config.d);
        rollouts.push(sde_sample(
            net,
            schedule,
            &z0,
            config.schedule.steps,
            i % labels,
            &mut rng.fork(1),
        )?);
    }
    Ok(proxy_report(&rollouts, net, &suite, rule)?)
}

pub fn proxy_report_to_json(report: &ProxyReport) -> serde_json::Value {
    serde_json::json!({
        "n_trajectories": report.n_trajectories,
        "n_degenerate": report.n_degenerate,
        "pearson_mean": report.pearson_mean,
        "pearson_std": report.pearson_std,
        "spearman_mean": report.spearman_mean,
        "spearman_std": report.spearman_std,
        "agreement_mean": report.agreement_mean,
        "agreement_std": report.agreement_std,
        "recall_at_3": report.recall_at_3,
        "recall_at_5": report.recall_at_5,
        "argmax_distance_mean": report.argmax_distance_mean,
    })
}

/// Load a policy checkpoint if present, else fall back to the pretrained
/// flow checkpoint (pretraining if even that is absent).
pub fn load_model_for_eval(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(VelocityNet, NoiseSchedule, PathBuf)> {
    let policy = out_dir.join(format!("policy-{}.ckpt", config.run_label()));
    if policy.exists() {
        let (net, schedule) = load_checkpoint(&policy)?;
        return Ok((net, schedule, policy));
    }
    let (net, schedule) = ensure_pretrained(config, out_dir)?;
    Ok((net, schedule, out_dir.join("flow.ckpt")))
}
