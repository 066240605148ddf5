//! Line-delimited metrics records, one JSON object per iteration.
//!
//! Wall time is reported on the console but deliberately excluded from the
//! serialized log so identical runs produce byte-identical files.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: usize,
    /// Mean raw reward per objective over every sample of the iteration.
    pub reward_mean: Vec<f64>,
    /// Mean over objectives of the per-objective means.
    pub reward_aggregate: f64,
    /// Clipped-surrogate value, averaged over groups.
    pub surrogate: f64,
    pub lambda_mean: f64,
    /// Elementwise mean of the per-sample coefficient vectors (stays on the
    /// simplex).
    pub coeff_mean: Vec<f64>,
    pub weight_entropy_mean: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

pub fn write_log(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| HarnessError::Numeric(format!("serializing metrics: {e}")))?;
        out.push(b'\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line)
                .map_err(|e| HarnessError::Config(format!("{}: bad record: {e}", path.display())))?,
        );
    }
    Ok(records)
}

/// Append one arbitrary JSON object to a log file (used for proxy reports).
pub fn append_json_line(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let line = serde_json::to_string(value)
        .map_err(|e| HarnessError::Numeric(format!("serializing report: {e}")))?;
    writeln!(file, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_excludes_wall_time() {
        let dir = std::env::temp_dir().join("otca-metrics-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("log.jsonl");
        let records = vec![MetricsRecord {
            iteration: 0,
            reward_mean: vec![-1.0, -2.0, 0.5],
            reward_aggregate: -0.8333,
            surrogate: 0.01,
            lambda_mean: 0.2,
            coeff_mean: vec![0.5, 0.25, 0.25],
            weight_entropy_mean: 2.1,
            wall_time_s: 1234.5,
        }];
        write_log(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("wall_time"));
        let loaded = read_log(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].iteration, 0);
        assert_eq!(loaded[0].wall_time_s, 0.0);
        std::fs::remove_file(&path).ok();
    }
}
