//! Re-derives stored summaries from the raw CSVs.

use std::path::Path;

use crate::config::{cell_name, Mode};
use crate::error::Result;
use crate::records::{read_csv, AggregateRecord, GridRecord, RunSummary, SeedRecord, TabularRecord};
use crate::run::{cell_dir, load_config, read_curve, run_tabular, sweep_cells};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    /// Summary values compared.
    pub checked: usize,
    pub mismatches: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn check(&mut self, what: impl FnOnce() -> String, equal: bool) {
        self.checked += 1;
        if !equal {
            self.mismatches.push(what());
        }
    }

    fn merge(&mut self, other: VerifyReport) {
        self.checked += other.checked;
        self.mismatches.extend(other.mismatches);
    }
}

/// Bit equality, with every NaN equal to every other.
fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

/// Verifies a run or sweep directory.
pub fn verify(dir: &Path) -> Result<VerifyReport> {
    if dir.join("grid.csv").exists() {
        verify_sweep(dir)
    } else {
        verify_run(dir)
    }
}

pub fn verify_run(dir: &Path) -> Result<VerifyReport> {
    let cfg = load_config(dir)?;
    let hash = cfg.hash();
    let mut report = VerifyReport::default();
    if cfg.experiment.mode == Mode::Tabular {
        let (header, stored): (_, Vec<TabularRecord>) = read_csv(&dir.join("tabular.csv"))?;
        report.check(|| "tabular.csv: config hash differs".into(), header.config_hash == hash);
        let (fresh, _) = run_tabular(&cfg)?;
        report.check(|| "tabular.csv: row count differs".into(), fresh.len() == stored.len());
        for (f, s) in fresh.iter().zip(&stored) {
            report.check(|| format!("tabular.csv: row for `{}` differs", s.statistic), f == s);
        }
        return Ok(report);
    }

    let (header, stored): (_, Vec<SeedRecord>) = read_csv(&dir.join("summary.csv"))?;
    report.check(|| "summary.csv: config hash differs".into(), header.config_hash == hash);
    let mut fresh = Vec::new();
    for &seed in &cfg.experiment.seeds {
        let (curve_header, rows) = read_curve(dir, seed)?;
        report.check(|| format!("curves/seed_{seed}.csv: config hash differs"), curve_header.config_hash == hash);
        let rec = SeedRecord::from_curve(seed, &rows, cfg.experiment.final_window);
        match stored.iter().find(|s| s.seed == seed) {
            Some(s) => {
                report.check(
                    || format!("seed {seed}: final_return {} != {}", s.final_return, rec.final_return),
                    same(s.final_return, rec.final_return),
                );
                report.check(
                    || format!("seed {seed}: first_success {} != {}", s.first_success, rec.first_success),
                    s.first_success == rec.first_success && s.censored == rec.censored,
                );
                report.check(
                    || format!("seed {seed}: updates {} != {}", s.updates, rec.updates),
                    s.updates == rec.updates,
                );
            }
            None => report.check(|| format!("summary.csv: seed {seed} missing"), false),
        }
        fresh.push(rec);
    }
    report.check(|| "summary.csv: unexpected rows".into(), stored.len() == fresh.len());

    let (agg_header, agg): (_, Vec<AggregateRecord>) = read_csv(&dir.join("aggregate.csv"))?;
    report.check(|| "aggregate.csv: config hash differs".into(), agg_header.config_hash == hash);
    let expected = RunSummary { seeds: fresh }.aggregate();
    report.check(|| "aggregate.csv: row count differs".into(), agg.len() == expected.len());
    for (s, e) in agg.iter().zip(&expected) {
        let equal =
            s.metric == e.metric && s.n == e.n && same(s.median, e.median) && same(s.q1, e.q1) && same(s.q3, e.q3);
        report.check(|| format!("aggregate.csv: `{}` differs", e.metric), equal);
    }
    Ok(report)
}

pub fn verify_sweep(dir: &Path) -> Result<VerifyReport> {
    let cfg = load_config(dir)?;
    let mut report = VerifyReport::default();
    let (header, stored): (_, Vec<GridRecord>) = read_csv(&dir.join("grid.csv"))?;
    report.check(|| "grid.csv: config hash differs".into(), header.config_hash == cfg.hash());
    let cells = sweep_cells(&cfg)?;
    report.check(|| "grid.csv: cell count differs".into(), stored.len() == cells.len());
    for (stat, rho, cell) in &cells {
        let cdir = cell_dir(dir, stat, *rho);
        let sub = verify_run(&cdir)?;
        report.merge(sub);
        let stored_cell = load_config(&cdir)?;
        report.check(|| format!("cell {}: config differs from the sweep", cell_name(stat, *rho)), &stored_cell == cell);
        let seeds: Vec<SeedRecord> = cell
            .experiment
            .seeds
            .iter()
            .map(|&seed| {
                read_curve(&cdir, seed)
                    .map(|(_, rows)| SeedRecord::from_curve(seed, &rows, cell.experiment.final_window))
            })
            .collect::<Result<_>>()?;
        let expected = GridRecord::new(stat, *rho, &cell_name(stat, *rho), &RunSummary { seeds });
        let found = stored.iter().find(|g| g.cell == expected.cell);
        let equal = found.is_some_and(|g| {
            g.statistic == expected.statistic
                && same(g.bias_ratio, expected.bias_ratio)
                && g.n == expected.n
                && [
                    (g.median_final, expected.median_final),
                    (g.q1_final, expected.q1_final),
                    (g.q3_final, expected.q3_final),
                    (g.median_first_success, expected.median_first_success),
                    (g.q1_first_success, expected.q1_first_success),
                    (g.q3_first_success, expected.q3_first_success),
                ]
                .iter()
                .all(|(a, b)| same(*a, *b))
        });
        report.check(|| format!("grid.csv: cell {} differs", expected.cell), equal);
    }
    Ok(report)
}
