//! CSV files written by the harness.
//!
//! Every file starts with one comment line
//! `# pathens-<kind> format=<n> version=<crate version> config=<sha256>`
//! followed by a fixed header row.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use pathens_core::agent::{CurveRow, LearningCurve};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::stats::Spread;

pub const FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub kind: String,
    pub format: u32,
    pub version: String,
    pub config_hash: String,
}

impl Header {
    pub fn new(kind: &str, config_hash: &str) -> Self {
        Self {
            kind: kind.to_string(),
            format: FORMAT,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
        }
    }

    fn line(&self) -> String {
        format!("# pathens-{} format={} version={} config={}", self.kind, self.format, self.version, self.config_hash)
    }

    fn parse(line: &str) -> Option<Self> {
        let mut parts = line.strip_prefix("# pathens-")?.split_whitespace();
        let kind = parts.next()?.to_string();
        let mut header = Self { kind, format: 0, version: String::new(), config_hash: String::new() };
        for part in parts {
            let (key, value) = part.split_once('=')?;
            match key {
                "format" => header.format = value.parse().ok()?,
                "version" => header.version = value.to_string(),
                "config" => header.config_hash = value.to_string(),
                _ => {}
            }
        }
        Some(header)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, header: &Header, rows: &[T]) -> Result<()> {
    let mut file = File::create(path).map_err(|e| HarnessError::Io(format!("creating {}: {e}", path.display())))?;
    writeln!(file, "{}", header.line())?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<(Header, Vec<T>)> {
    let open = || File::open(path).map_err(|e| HarnessError::Io(format!("reading {}: {e}", path.display())));
    let mut first = String::new();
    BufReader::new(open()?).read_line(&mut first)?;
    let header = Header::parse(first.trim_end())
        .ok_or_else(|| HarnessError::Io(format!("{}: missing or malformed header comment", path.display())))?;
    if header.format != FORMAT {
        return Err(HarnessError::Io(format!("{}: unsupported format {}", path.display(), header.format)));
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(open()?);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok((header, rows))
}

/// One learning-curve row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub update: usize,
    pub env_steps: usize,
    pub mean_return: f64,
    pub n_episodes: usize,
    pub n_positive: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub frac_biased: f64,
    pub max_ratio_dev: f64,
}

impl From<&CurveRow> for CurveRecord {
    fn from(r: &CurveRow) -> Self {
        Self {
            update: r.update,
            env_steps: r.env_steps,
            mean_return: r.mean_return,
            n_episodes: r.n_episodes,
            n_positive: r.n_positive,
            policy_loss: r.policy_loss,
            value_loss: r.value_loss,
            entropy: r.entropy,
            frac_biased: r.frac_biased,
            max_ratio_dev: r.max_ratio_deviation,
        }
    }
}

impl From<&CurveRecord> for CurveRow {
    fn from(r: &CurveRecord) -> Self {
        Self {
            update: r.update,
            env_steps: r.env_steps,
            mean_return: r.mean_return,
            n_episodes: r.n_episodes,
            n_positive: r.n_positive,
            policy_loss: r.policy_loss,
            value_loss: r.value_loss,
            entropy: r.entropy,
            frac_biased: r.frac_biased,
            max_ratio_deviation: r.max_ratio_dev,
        }
    }
}

/// Per-seed outcome. `first_success` is censored at the number of updates
/// when no positive-return episode occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub final_return: f64,
    pub first_success: usize,
    pub censored: bool,
    pub updates: usize,
}

impl SeedRecord {
    pub fn from_curve(seed: u64, rows: &[CurveRecord], final_window: usize) -> Self {
        let curve = LearningCurve { rows: rows.iter().map(CurveRow::from).collect() };
        let first = curve.updates_to_first_success();
        Self {
            seed,
            final_return: curve.final_mean_return(final_window),
            first_success: first.unwrap_or(rows.len()),
            censored: first.is_none(),
            updates: rows.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub metric: String,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Per-seed records of one run with their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seeds: Vec<SeedRecord>,
}

impl RunSummary {
    pub fn final_returns(&self) -> Vec<f64> {
        self.seeds.iter().map(|s| s.final_return).collect()
    }

    pub fn first_successes(&self) -> Vec<f64> {
        self.seeds.iter().map(|s| s.first_success as f64).collect()
    }

    pub fn final_return(&self) -> Spread {
        Spread::of(&self.final_returns())
    }

    pub fn first_success(&self) -> Spread {
        Spread::of(&self.first_successes())
    }

    pub fn aggregate(&self) -> Vec<AggregateRecord> {
        let rec = |metric: &str, s: Spread| AggregateRecord {
            metric: metric.to_string(),
            n: self.seeds.len(),
            median: s.median,
            q1: s.q1,
            q3: s.q3,
        };
        vec![rec("final_return", self.final_return()), rec("first_success", self.first_success())]
    }
}

/// One timestep of estimator output. Ensemble horizons and values are `;`-joined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub seed: u64,
    pub update: usize,
    pub traj: usize,
    pub t: usize,
    pub state: usize,
    pub action: usize,
    pub value: f64,
    pub ks: String,
    pub estimates: String,
    pub min: f64,
    pub max: f64,
    pub maxabs: f64,
    pub gae: f64,
    pub statistic: String,
    pub biased: f64,
    pub chosen_k: usize,
    pub used_biased: bool,
    pub mixed: f64,
    pub target: f64,
}

impl DiagnosticRecord {
    pub fn estimate_values(&self) -> Result<Vec<f64>> {
        self.estimates
            .split(';')
            .map(|v| v.parse::<f64>().map_err(|e| HarnessError::Io(format!("estimates `{}`: {e}", self.estimates))))
            .collect()
    }
}

/// Policy iteration outcome for one evaluation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularRecord {
    pub env: String,
    pub statistic: String,
    pub iterations_to_optimal: Option<usize>,
    pub iterations_run: usize,
    pub final_optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularQRecord {
    pub statistic: String,
    pub iteration: usize,
    pub state: usize,
    pub action: usize,
    pub q: f64,
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub statistic: String,
    pub bias_ratio: f64,
    pub cell: String,
    pub n: usize,
    pub median_final: f64,
    pub q1_final: f64,
    pub q3_final: f64,
    pub median_first_success: f64,
    pub q1_first_success: f64,
    pub q3_first_success: f64,
}

impl GridRecord {
    pub fn new(statistic: &str, bias_ratio: f64, cell: &str, summary: &RunSummary) -> Self {
        let f = summary.final_return();
        let s = summary.first_success();
        Self {
            statistic: statistic.to_string(),
            bias_ratio,
            cell: cell.to_string(),
            n: summary.seeds.len(),
            median_final: f.median,
            q1_final: f.q1,
            q3_final: f.q3,
            median_first_success: s.median,
            q1_first_success: s.q1,
            q3_first_success: s.q3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let h = Header::new("curve", "abc123");
        assert_eq!(Header::parse(&h.line()), Some(h));
        assert_eq!(Header::parse("update,env_steps"), None);
    }

    #[test]
    fn csv_round_trip_keeps_nan_and_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let rows = vec![
            CurveRecord {
                update: 0,
                env_steps: 512,
                mean_return: f64::NAN,
                n_episodes: 0,
                n_positive: 0,
                policy_loss: 0.1 + 0.2,
                value_loss: 1e-300,
                entropy: 1.3862943611198906,
                frac_biased: 0.0,
                max_ratio_dev: 0.0,
            },
            CurveRecord { update: 1, mean_return: -3.25, n_episodes: 4, ..rows_template() },
        ];
        write_csv(&path, &Header::new("curve", "h"), &rows).unwrap();
        let (header, back): (Header, Vec<CurveRecord>) = read_csv(&path).unwrap();
        assert_eq!(header.config_hash, "h");
        assert!(back[0].mean_return.is_nan());
        assert_eq!(back[0].policy_loss.to_bits(), rows[0].policy_loss.to_bits());
        assert_eq!(back[1], rows[1]);
    }

    fn rows_template() -> CurveRecord {
        CurveRecord {
            update: 0,
            env_steps: 0,
            mean_return: 0.0,
            n_episodes: 0,
            n_positive: 0,
            policy_loss: 0.0,
            value_loss: 0.0,
            entropy: 0.0,
            frac_biased: 0.0,
            max_ratio_dev: 0.0,
        }
    }

    #[test]
    fn censored_first_success() {
        let mut rows: Vec<CurveRecord> = (0..5).map(|u| CurveRecord { update: u, ..rows_template() }).collect();
        let rec = SeedRecord::from_curve(3, &rows, 2);
        assert_eq!((rec.first_success, rec.censored), (5, true));
        rows[2].n_positive = 1;
        rows[2].n_episodes = 1;
        rows[2].mean_return = 1.0;
        let rec = SeedRecord::from_curve(3, &rows, 2);
        assert_eq!((rec.first_success, rec.censored), (2, false));
    }
}
