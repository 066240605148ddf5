//! Ablation sweep: the same base experiment under each credit-assignment
//! variant, repeated over seeds, summarized as a table of final rewards.

use std::path::Path;

use otca_core::flow::save_checkpoint;

use crate::config::{ExperimentConfig, Variant};
use crate::error::{HarnessError, Result};
use crate::metrics::MetricsRecord;
use crate::runner::{pretrain_model, run_experiment};

#[derive(Debug, Clone, serde::Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub n_seeds: usize,
    /// Per-objective (mean, population std) of the final mean raw reward.
    pub per_objective: Vec<(f64, f64)>,
    pub aggregate_mean: f64,
    pub aggregate_std: f64,
    /// Final aggregate reward of each seed, in seed order.
    pub per_seed_aggregate: Vec<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AblationTable {
    pub objectives: Vec<String>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<10}", "variant"));
        for name in &self.objectives {
            out.push_str(&format!("  {:>18}", name));
        }
        out.push_str(&format!("  {:>18}\n", "aggregate"));
        for row in &self.rows {
            out.push_str(&format!("{:<10}", row.variant));
            for (mean, std) in &row.per_objective {
                out.push_str(&format!("  {:>10.4} ±{:>5.3}", mean, std));
            }
            out.push_str(&format!(
                "  {:>10.4} ±{:>5.3}\n",
                row.aggregate_mean, row.aggregate_std
            ));
        }
        out
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Run every config and summarize final rewards per variant.
///
/// The configs must differ only in their mode flags and seed; runs sharing a
/// seed reuse one pretrained model (saved per seed under `out_dir`).
pub fn compare_variants(configs: &[ExperimentConfig], out_dir: &Path) -> Result<AblationTable> {
    if configs.is_empty() {
        return Err(HarnessError::Config("no configs to compare".into()));
    }
    let base = configs[0].normalized_base();
    for (i, cfg) in configs.iter().enumerate() {
        cfg.validate()?;
        if cfg.normalized_base() != base {
            return Err(HarnessError::Config(format!(
                "config {i} differs from the base beyond mode flags and seed"
            )));
        }
    }
    std::fs::create_dir_all(out_dir)?;

    // One pretrained model per seed, shared across variants for pairing.
    let mut seeds: Vec<u64> = configs.iter().map(|c| c.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut pretrained = std::collections::BTreeMap::new();
    for &seed in &seeds {
        let mut cfg = configs[0].clone();
        cfg.seed = seed;
        let (net, schedule, loss) = pretrain_model(&cfg)?;
        let path = out_dir.join(format!("flow-seed{seed}.ckpt"));
        save_checkpoint(&path, &net, &schedule)?;
        println!("seed {seed}: pretrained (loss {loss:.4})");
        pretrained.insert(seed, (net, schedule));
    }

    // variant name -> (objective sums per seed)
    let mut finals: Vec<(String, MetricsRecord)> = Vec::new();
    for cfg in configs {
        let (net, schedule) = pretrained.get(&cfg.seed).expect("pretrained above").clone();
        let artifacts = run_experiment(cfg, out_dir, Some((net, schedule)))?;
        let label = cfg
            .variant()
            .map(|v| v.name().to_string())
            .unwrap_or_else(|| "custom".into());
        println!(
            "{}-{}: final aggregate reward {:.4}",
            label, cfg.seed, artifacts.final_record.reward_aggregate
        );
        finals.push((label, artifacts.final_record));
    }

    let objectives = configs[0].reward_names();
    let mut rows = Vec::new();
    let mut seen = Vec::new();
    for (label, _) in &finals {
        if seen.iter().any(|l| l == label) {
            continue;
        }
        seen.push(label.clone());
        let group: Vec<&MetricsRecord> = finals
            .iter()
            .filter(|(l, _)| l == label)
            .map(|(_, r)| r)
            .collect();
        let per_objective = (0..objectives.len())
            .map(|k| mean_std(&group.iter().map(|r| r.reward_mean[k]).collect::<Vec<_>>()))
            .collect();
        let aggregates: Vec<f64> = group.iter().map(|r| r.reward_aggregate).collect();
        let (aggregate_mean, aggregate_std) = mean_std(&aggregates);
        rows.push(AblationRow {
            variant: label.clone(),
            n_seeds: group.len(),
            per_objective,
            aggregate_mean,
            aggregate_std,
            per_seed_aggregate: aggregates,
        });
    }
    Ok(AblationTable { objectives, rows })
}

/// Build the variant × seed config grid from a base config.
pub fn ablation_grid(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let mut configs = Vec::new();
    for &variant in &base.ablation.variants {
        for &seed in &base.ablation.seeds {
            let mut cfg = base.clone().with_variant(variant);
            cfg.seed = seed;
            configs.push(cfg);
        }
    }
    configs
}

/// Variant lookup in a finished table.
impl AblationTable {
    pub fn row(&self, variant: Variant) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant.name())
    }

    /// Pooled std over all rows' per-seed aggregates.
    pub fn pooled_aggregate_std(&self) -> f64 {
        let vars: Vec<f64> = self
            .rows
            .iter()
            .map(|r| {
                let (_, s) = mean_std(&r.per_seed_aggregate);
                s * s
            })
            .collect();
        (vars.iter().sum::<f64>() / vars.len() as f64).sqrt()
    }
}
