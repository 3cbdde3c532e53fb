use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pathens_cli::compare::compare;
use pathens_cli::config::{parse_seeds, ExperimentConfig};
use pathens_cli::diagnose::diagnose;
use pathens_cli::envs::ENVS;
use pathens_cli::records::{write_csv, Header};
use pathens_cli::verify::verify;
use pathens_cli::{run, sweep, HarnessError, RunOptions, RunOutput};

#[derive(Parser)]
#[command(name = "pathens", version, about = "Path-ensemble advantage experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `experiment.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds, as `a..b` or `s1,s2,...`; overrides `experiment.seeds`.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or solve, in tabular mode) every seed of a config.
    Run(RunArgs),
    /// Run the statistic x bias-ratio grid of the config's [sweep] section.
    Sweep(RunArgs),
    /// Paired comparison of two run directories (B against A).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump stored per-timestep estimator rows of one update.
    Diagnose {
        run: PathBuf,
        #[arg(long)]
        update: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination (default: stdout summary only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute every summary in a run or sweep directory from its raw CSVs.
    Verify { dir: PathBuf },
    /// List the available environments.
    ListEnvs,
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf, RunOptions), HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seeds) = &args.seeds {
        cfg.experiment.seeds = parse_seeds(seeds)?;
    }
    if let Some(out) = &args.out {
        cfg.experiment.out = Some(out.clone());
    }
    cfg.validate()?;
    let out = cfg.out_dir();
    Ok((cfg, out, RunOptions { force: args.force, workers: args.workers }))
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let (cfg, out, opts) = load(&args)?;
            match run(&cfg, &out, opts)? {
                RunOutput::Train(summary) => {
                    for s in &summary.seeds {
                        println!(
                            "seed {:>4}  final return {:>10.4}  first success {}{}",
                            s.seed,
                            s.final_return,
                            s.first_success,
                            if s.censored { " (censored)" } else { "" }
                        );
                    }
                    let f = summary.final_return();
                    println!("median final return {:.4}  IQR [{:.4}, {:.4}]", f.median, f.q1, f.q3);
                }
                RunOutput::Tabular(rows) => {
                    for r in rows {
                        let iters = r.iterations_to_optimal.map_or_else(|| "never".to_string(), |n| n.to_string());
                        println!("{}  {:<10} iterations_to_optimal = {iters}", r.env, r.statistic);
                    }
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Sweep(args) => {
            let (cfg, out, opts) = load(&args)?;
            for g in sweep(&cfg, &out, opts)? {
                println!(
                    "{:<16} median final {:>10.4}  median first success {:>8.1}",
                    g.cell, g.median_final, g.median_first_success
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Compare { a, b, out } => {
            let report = compare(&a, &b)?.render();
            print!("{report}");
            if let Some(path) = out {
                std::fs::write(path, report)?;
            }
        }
        Command::Diagnose { run, update, seed, out } => {
            let report = diagnose(&run, update, seed)?;
            println!("seed {} update {}: {} rows", report.seed, report.update, report.rows.len());
            if let Some(path) = out {
                let cfg = ExperimentConfig::load(&run.join("config.toml"))?;
                write_csv(&path, &Header::new("diagnostics", &cfg.hash()), &report.rows)?;
                println!("wrote {}", path.display());
            }
            if !report.violations.is_empty() {
                for v in &report.violations {
                    eprintln!("{v}");
                }
                return Err(HarnessError::Mismatch(format!("{} invariant violations", report.violations.len())));
            }
        }
        Command::Verify { dir } => {
            let report = verify(&dir)?;
            for m in &report.mismatches {
                eprintln!("mismatch: {m}");
            }
            println!("checked {} values, {} mismatches", report.checked, report.mismatches.len());
            if !report.ok() {
                return Err(HarnessError::Mismatch(format!("{} mismatches", report.mismatches.len())));
            }
        }
        Command::ListEnvs => {
            for e in ENVS {
                println!("{:<6} {}{}", e.name, e.description, if e.tabular { " [tabular]" } else { "" });
                println!("       params: {}", e.params.join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
