use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// One line of the CSV report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub metric: String,
    pub value: f64,
    pub mc_se: Option<f64>,
    /// Replications that contributed.
    pub reps: usize,
    /// Warnings raised in those replications.
    pub warnings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedReplication {
    pub scenario: String,
    pub rep: usize,
    pub method: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub skipped: Vec<SkippedReplication>,
    /// Distinct warning messages, in order of first appearance (capped).
    pub warning_samples: Vec<String>,
    /// Not serialized, so report files depend only on config and seed.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

pub(crate) const WARNING_SAMPLE_CAP: usize = 50;

impl SimReport {
    pub fn row(&self, method: &str, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.metric == metric)
    }

    pub fn value(&self, method: &str, metric: &str) -> Option<f64> {
        self.row(method, metric).map(|r| r.value)
    }

    /// `method,metric,value,mc_se,reps,warnings`; depends only on the
    /// configuration and seed.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| HarnessError::Output(e.to_string()))?;
        }
        w.flush().map_err(|e| HarnessError::Output(e.to_string()))
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| HarnessError::Output(e.to_string()))
    }

    /// Full report including the configuration echo, seed and timing.
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| HarnessError::Output(e.to_string()))
    }

    /// Writes `<stem>.csv` and `<stem>.json`, returning both paths.
    pub fn write_files(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = stem.with_extension("csv");
        let json_path = stem.with_extension("json");
        let io = |p: &Path, e: std::io::Error| HarnessError::Io(format!("{}: {e}", p.display()));
        if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        self.write_csv(std::fs::File::create(&csv_path).map_err(|e| io(&csv_path, e))?)?;
        let mut f = std::fs::File::create(&json_path).map_err(|e| io(&json_path, e))?;
        self.write_json(&mut f)?;
        writeln!(f).map_err(|e| io(&json_path, e))?;
        Ok((csv_path, json_path))
    }
}

/// Standard error of a proportion `r` over `reps` replications.
pub fn rate_se(r: f64, reps: usize) -> f64 {
    if reps == 0 {
        f64::NAN
    } else {
        (r * (1.0 - r) / reps as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_se_formula() {
        assert_eq!(rate_se(0.5, 100), 0.05);
        assert_eq!(rate_se(0.0, 10), 0.0);
        assert!(rate_se(0.3, 0).is_nan());
    }
}
