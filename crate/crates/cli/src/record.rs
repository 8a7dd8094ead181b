//! Experiment specs, records, verdicts, and the three output artifacts
//! (CSV rows, JSON record, log-log plot data).

use std::collections::BTreeMap;
use std::fs;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// A named pipeline invocation with parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub pipeline: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentSpec {
    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .with_context(|| format!("parameter '{key}' must be a number, got {v}")),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .or_else(|| v.as_f64().filter(|f| f.fract() == 0.0 && *f >= 0.0).map(|f| f as u64))
                .with_context(|| format!("parameter '{key}' must be a non-negative integer, got {v}")),
        }
    }

    pub fn u64_list(&self, key: &str, default: &[u64]) -> Result<Vec<u64>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .as_array()
                .and_then(|a| a.iter().map(|x| x.as_u64()).collect::<Option<Vec<_>>>())
                .with_context(|| format!("parameter '{key}' must be a list of integers, got {v}")),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// One named pass/fail comparison. Every verdict carries the predicted value
/// and the tolerance it was judged at.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    /// |measured - predicted| <= tolerance.
    pub fn within(name: &str, predicted: f64, measured: f64, tolerance: f64) -> Verdict {
        Verdict {
            name: name.to_string(),
            predicted,
            measured,
            tolerance,
            pass: (measured - predicted).abs() <= tolerance,
        }
    }

    /// measured >= predicted - tolerance.
    pub fn at_least(name: &str, predicted: f64, measured: f64, tolerance: f64) -> Verdict {
        Verdict {
            name: name.to_string(),
            predicted,
            measured,
            tolerance,
            pass: measured >= predicted - tolerance,
        }
    }

    /// measured <= predicted + tolerance.
    pub fn at_most(name: &str, predicted: f64, measured: f64, tolerance: f64) -> Verdict {
        Verdict {
            name: name.to_string(),
            predicted,
            measured,
            tolerance,
            pass: measured <= predicted + tolerance,
        }
    }
}

/// Full result of one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub spec: ExperimentSpec,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub fitted: BTreeMap<String, f64>,
    pub predicted: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    /// Two-column log-log pairs for external plotting.
    pub plot: Vec<(f64, f64)>,
    pub wall_clock_ms: u128,
}

impl ExperimentRecord {
    pub fn new(spec: ExperimentSpec, columns: &[&str]) -> Self {
        ExperimentRecord {
            spec,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            fitted: BTreeMap::new(),
            predicted: BTreeMap::new(),
            verdicts: Vec::new(),
            plot: Vec::new(),
            wall_clock_ms: 0,
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn passes(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn write_artifacts(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        let base = out_dir.join(&self.spec.pipeline);

        let mut csv = String::new();
        csv.push_str(&self.columns.join(","));
        csv.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        fs::write(base.with_extension("csv"), csv)?;

        let json = serde_json::to_string_pretty(self)?;
        fs::write(base.with_extension("json"), json)?;

        let mut plot = String::new();
        for (x, y) in &self.plot {
            let _ = writeln!(plot, "{x} {y}");
        }
        fs::write(base.with_extension("plotdata"), plot)?;
        Ok(())
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.verdicts
            .iter()
            .map(|v| {
                format!(
                    "{}: {} (measured {:.6}, predicted {:.6}, tolerance {:.6})",
                    v.name,
                    if v.pass { "PASS" } else { "FAIL" },
                    v.measured,
                    v.predicted,
                    v.tolerance
                )
            })
            .collect()
    }
}
