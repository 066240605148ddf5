//! Reward-curve export: flatten metrics logs into one plottable CSV with
//! columns `iteration,variant,objective,value`.

use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::metrics::{read_log, MetricsRecord};

/// One run's records under its variant label.
pub struct RunSeries {
    pub label: String,
    pub records: Vec<MetricsRecord>,
}

/// Collect `metrics-*.jsonl` logs from a directory.
pub fn collect_runs(dir: &Path) -> Result<Vec<RunSeries>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("metrics-") && n.ends_with(".jsonl"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    let mut runs = Vec::new();
    for path in paths {
        let stem = path
            .file_stem()
            .and_then(|n| n.to_str())
            .expect("filtered above");
        let label = stem.trim_start_matches("metrics-").to_string();
        runs.push(RunSeries {
            label,
            records: read_log(&path)?,
        });
    }
    Ok(runs)
}

/// Render the curve CSV from run series, validating that every run has a
/// contiguous iteration range starting at zero.
pub fn emit_reward_curves(runs: &[RunSeries], objectives: &[String]) -> Result<String> {
    if runs.is_empty() || runs.iter().all(|r| r.records.is_empty()) {
        return Err(HarnessError::Config("no metrics records to export".into()));
    }
    let mut out = String::from("iteration,variant,objective,value\n");
    for run in runs {
        for (i, record) in run.records.iter().enumerate() {
            if record.iteration != i {
                return Err(HarnessError::Config(format!(
                    "run '{}' is missing iteration {i} (found {})",
                    run.label, record.iteration
                )));
            }
            if record.reward_mean.len() != objectives.len() {
                return Err(HarnessError::Config(format!(
                    "run '{}' has {} objectives, expected {}",
                    run.label,
                    record.reward_mean.len(),
                    objectives.len()
                )));
            }
            for (name, value) in objectives.iter().zip(&record.reward_mean) {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    record.iteration, run.label, name, value
                ));
            }
            out.push_str(&format!(
                "{},{},aggregate,{}\n",
                record.iteration, run.label, record.reward_aggregate
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iteration: usize, rewards: Vec<f64>) -> MetricsRecord {
        let aggregate = rewards.iter().sum::<f64>() / rewards.len() as f64;
        MetricsRecord {
            iteration,
            reward_mean: rewards,
            reward_aggregate: aggregate,
            surrogate: 0.0,
            lambda_mean: 0.0,
            coeff_mean: vec![],
            weight_entropy_mean: 0.0,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn single_record_exports_one_row_per_objective() {
        let runs = vec![RunSeries {
            label: "full-1".into(),
            records: vec![record(0, vec![-1.0, -2.0])],
        }];
        let csv = emit_reward_curves(&runs, &["a".into(), "b".into()]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iteration,variant,objective,value");
        assert_eq!(lines[1], "0,full-1,a,-1");
        assert_eq!(lines[2], "0,full-1,b,-2");
        assert_eq!(lines[3], "0,full-1,aggregate,-1.5");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn missing_iterations_flagged() {
        let runs = vec![RunSeries {
            label: "full-1".into(),
            records: vec![record(0, vec![1.0]), record(2, vec![1.0])],
        }];
        let err = emit_reward_curves(&runs, &["a".into()]).unwrap_err();
        assert!(err.to_string().contains("missing iteration"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(emit_reward_curves(&[], &[]).is_err());
    }
}
