//! Reading back stored per-timestep estimator rows.

use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::records::{read_csv, DiagnosticRecord};
use crate::run::{diagnostics_path, load_config};

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseReport {
    pub seed: u64,
    pub update: usize,
    pub rows: Vec<DiagnosticRecord>,
    /// Rows breaking an estimator invariant.
    pub violations: Vec<String>,
}

/// Loads the rows of `update` (first configured seed unless given) and re-checks
/// the ensemble invariants.
pub fn diagnose(dir: &Path, update: usize, seed: Option<u64>) -> Result<DiagnoseReport> {
    let cfg = load_config(dir)?;
    let seed = seed.unwrap_or(cfg.experiment.seeds[0]);
    if !cfg.experiment.seeds.contains(&seed) {
        return Err(HarnessError::Config(format!("seed {seed} is not part of this run")));
    }
    let path = diagnostics_path(dir, seed, update);
    if !cfg.experiment.diagnose_updates.contains(&update) || !path.exists() {
        return Err(HarnessError::Config(format!(
            "update {update} out of range: diagnostics stored for updates {:?}",
            cfg.experiment.diagnose_updates
        )));
    }
    let (_, rows): (_, Vec<DiagnosticRecord>) = read_csv(&path)?;
    let mut violations = Vec::new();
    let no_bias = cfg.estimator.bias_ratio == 0.0;
    for r in &rows {
        let at = format!("traj {} t {}", r.traj, r.t);
        let values = r.estimate_values()?;
        if values.iter().any(|v| *v < r.min || *v > r.max) {
            violations.push(format!("{at}: estimate outside [min, max]"));
        }
        if r.maxabs != r.min && r.maxabs != r.max {
            violations.push(format!("{at}: maxabs is neither min nor max"));
        }
        if no_bias && r.used_biased {
            violations.push(format!("{at}: biased estimate used with bias_ratio 0"));
        }
    }
    Ok(DiagnoseReport { seed, update, rows, violations })
}
