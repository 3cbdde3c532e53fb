//! Running experiments and sweeps into output directories.
//!
//! Layout of a run directory:
//!
//! ```text
//! config.toml                       normalized config
//! curves/seed_<s>.csv               one learning curve per seed
//! diagnostics/seed_<s>_update_<u>.csv
//! summary.csv                       per-seed final return and first success
//! aggregate.csv                     medians and quartiles
//! tabular.csv, tabular_q.csv        tabular mode only
//! ```
//!
//! A sweep directory holds `config.toml`, `grid.csv` and one run directory per
//! cell under `cells/`.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use pathens_core::advantage::{order_statistic, Statistic};
use pathens_core::agent::{train_with, Batch};
use pathens_core::tabular::policy_iteration;
use rayon::prelude::*;

use crate::config::{cell_name, parse_statistic, statistic_label, ExperimentConfig, Mode};
use crate::envs;
use crate::error::{HarnessError, Result};
use crate::records::{
    read_csv, write_csv, CurveRecord, DiagnosticRecord, GridRecord, Header, RunSummary, SeedRecord, TabularQRecord,
    TabularRecord,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Replace an existing nonempty output directory.
    pub force: bool,
    /// Worker threads; all cores when `None`.
    pub workers: Option<usize>,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Train(RunSummary),
    Tabular(Vec<TabularRecord>),
}

pub fn curve_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join("curves").join(format!("seed_{seed}.csv"))
}

pub fn diagnostics_path(dir: &Path, seed: u64, update: usize) -> PathBuf {
    dir.join("diagnostics").join(format!("seed_{seed}_update_{update}.csv"))
}

fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let nonempty = std::fs::read_dir(dir)?.next().is_some();
        if nonempty && !force {
            return Err(HarnessError::Exists(dir.display().to_string()));
        }
        if nonempty {
            std::fs::remove_dir_all(dir)?;
        }
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

pub fn load_config(dir: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&dir.join("config.toml"))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| HarnessError::Runtime(e.to_string()))
}

/// Runs every seed of `cfg` into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    prepare_dir(out, opts.force)?;
    write_config(out, cfg)?;
    match cfg.experiment.mode {
        Mode::Tabular => {
            let (rows, q_rows) = run_tabular(cfg)?;
            let header = Header::new("tabular", &cfg.hash());
            write_csv(&out.join("tabular.csv"), &header, &rows)?;
            write_csv(&out.join("tabular_q.csv"), &Header::new("tabular-q", &cfg.hash()), &q_rows)?;
            Ok(RunOutput::Tabular(rows))
        }
        Mode::Train => {
            prepare_train_dirs(out)?;
            let jobs: Vec<_> = cfg.experiment.seeds.iter().map(|s| (cfg, out, *s)).collect();
            let records = pool(opts.workers)?
                .install(|| jobs.par_iter().map(|(c, d, s)| run_seed(c, d, *s)).collect::<Result<Vec<_>>>())?;
            let summary = RunSummary { seeds: records };
            write_summary(out, cfg, &summary)?;
            Ok(RunOutput::Train(summary))
        }
    }
}

fn prepare_train_dirs(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("curves"))?;
    std::fs::create_dir_all(dir.join("diagnostics"))?;
    Ok(())
}

pub(crate) fn write_summary(dir: &Path, cfg: &ExperimentConfig, summary: &RunSummary) -> Result<()> {
    write_csv(&dir.join("summary.csv"), &Header::new("summary", &cfg.hash()), &summary.seeds)?;
    write_csv(&dir.join("aggregate.csv"), &Header::new("aggregate", &cfg.hash()), &summary.aggregate())?;
    Ok(())
}

/// Policy iteration under every configured evaluation rule.
pub fn run_tabular(cfg: &ExperimentConfig) -> Result<(Vec<TabularRecord>, Vec<TabularQRecord>)> {
    let tab = cfg.tabular.clone().unwrap_or_default();
    let mdp = envs::build_mdp(&cfg.env)?;
    let mut rows = Vec::new();
    let mut q_rows = Vec::new();
    for name in &tab.statistics {
        let stat = parse_statistic(name)?;
        let label = statistic_label(stat);
        let result = policy_iteration(&mdp, stat, tab.max_iterations, tab.horizon)?;
        for rec in &result.trace {
            for s in 0..rec.q.n_states() {
                for a in 0..rec.q.n_actions() {
                    q_rows.push(TabularQRecord {
                        statistic: label.clone(),
                        iteration: rec.iteration,
                        state: s,
                        action: a,
                        q: rec.q.get(s, a),
                    });
                }
            }
        }
        rows.push(TabularRecord {
            env: cfg.env.name.clone(),
            statistic: label,
            iterations_to_optimal: result.iterations_to_optimal,
            iterations_run: result.trace.len(),
            final_optimal: result.iterations_to_optimal.is_some(),
        });
    }
    Ok((rows, q_rows))
}

fn run_seed(cfg: &ExperimentConfig, dir: &Path, seed: u64) -> Result<SeedRecord> {
    let env = envs::build(&cfg.env)?;
    let tc = cfg.train_config(seed)?;
    let hash = cfg.hash();
    let statistic = tc.estimator.statistic;
    let diag_error: Mutex<Option<HarnessError>> = Mutex::new(None);
    let curve = train_with(env, &tc, |row, batch, _| {
        if cfg.experiment.diagnose_updates.contains(&row.update) {
            let result = diagnostic_records(seed, row.update, batch, statistic).and_then(|rows| {
                write_csv(&diagnostics_path(dir, seed, row.update), &Header::new("diagnostics", &hash), &rows)
            });
            if let Err(e) = result {
                diag_error.lock().expect("diagnostics lock").get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = diag_error.into_inner().expect("diagnostics lock") {
        return Err(e);
    }
    let records: Vec<CurveRecord> = curve.rows.iter().map(CurveRecord::from).collect();
    write_csv(&curve_path(dir, seed), &Header::new("curve", &hash), &records)?;
    Ok(SeedRecord::from_curve(seed, &records, cfg.experiment.final_window))
}

/// Estimator rows of one batch, in sample order.
pub fn diagnostic_records(
    seed: u64,
    update: usize,
    batch: &Batch,
    statistic: Option<Statistic>,
) -> Result<Vec<DiagnosticRecord>> {
    let mut rows = Vec::with_capacity(batch.len());
    let mut samples = batch.samples.iter();
    for (traj_index, traj) in batch.trajectories.iter().enumerate() {
        for t in 0..traj.len() {
            let sample =
                samples.next().ok_or_else(|| HarnessError::Runtime("batch has fewer samples than steps".into()))?;
            let est = &sample.estimate;
            let join = |f: &dyn Fn(&(usize, f64)) -> String| {
                est.ensemble.entries().iter().map(f).collect::<Vec<_>>().join(";")
            };
            rows.push(DiagnosticRecord {
                seed,
                update,
                traj: traj_index,
                t,
                state: sample.state,
                action: sample.action,
                value: est.value,
                ks: join(&|(k, _)| k.to_string()),
                estimates: join(&|(_, v)| v.to_string()),
                min: order_statistic(&est.ensemble, Statistic::Min)?.0,
                max: order_statistic(&est.ensemble, Statistic::Max)?.0,
                maxabs: order_statistic(&est.ensemble, Statistic::MaxAbs)?.0,
                gae: est.baseline_advantage,
                statistic: statistic_label(statistic),
                biased: if statistic.is_some() { est.biased_advantage } else { f64::NAN },
                chosen_k: est.chosen_k,
                used_biased: est.used_biased,
                mixed: est.mixed_advantage,
                target: est.critic_target,
            });
        }
    }
    Ok(rows)
}

/// Reads a stored learning curve.
pub fn read_curve(dir: &Path, seed: u64) -> Result<(Header, Vec<CurveRecord>)> {
    read_csv(&curve_path(dir, seed))
}

/// The statistic x bias-ratio cells of a sweep, in grid order.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Result<Vec<(String, f64, ExperimentConfig)>> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| HarnessError::Config("sweep: missing [sweep] section".into()))?;
    let mut cells = Vec::new();
    for stat in &sweep.statistics {
        for &rho in &sweep.bias_ratios {
            let label = statistic_label(parse_statistic(stat)?);
            let mut cell = cfg.with_cell(&label, rho);
            cell.experiment.out = None;
            cells.push((label, rho, cell));
        }
    }
    Ok(cells)
}

pub fn cell_dir(sweep_dir: &Path, statistic: &str, bias_ratio: f64) -> PathBuf {
    sweep_dir.join("cells").join(cell_name(statistic, bias_ratio))
}

/// Runs every cell of the sweep, parallel over cells and seeds.
pub fn sweep(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<Vec<GridRecord>> {
    cfg.validate()?;
    let cells = sweep_cells(cfg)?;
    prepare_dir(out, opts.force)?;
    write_config(out, cfg)?;
    let mut jobs = Vec::new();
    for (stat, rho, cell) in &cells {
        let dir = cell_dir(out, stat, *rho);
        std::fs::create_dir_all(&dir)?;
        write_config(&dir, cell)?;
        prepare_train_dirs(&dir)?;
        for &seed in &cell.experiment.seeds {
            jobs.push((cell, dir.clone(), seed));
        }
    }
    let records = pool(opts.workers)?
        .install(|| jobs.par_iter().map(|(c, d, s)| run_seed(c, d, *s)).collect::<Result<Vec<_>>>())?;
    let mut grid = Vec::new();
    let mut it = records.into_iter();
    for (stat, rho, cell) in &cells {
        let summary = RunSummary { seeds: it.by_ref().take(cell.experiment.seeds.len()).collect() };
        write_summary(&cell_dir(out, stat, *rho), cell, &summary)?;
        grid.push(GridRecord::new(stat, *rho, &cell_name(stat, *rho), &summary));
    }
    write_csv(&out.join("grid.csv"), &Header::new("grid", &cfg.hash()), &grid)?;
    Ok(grid)
}
