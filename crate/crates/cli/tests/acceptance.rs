//! Acceptance suite. Prints one PASS/FAIL line per criterion. Exact criteria
//! fail the suite; the two seed-level training comparisons only do so with
//! `PATHENS_ACCEPTANCE_STRICT=1`. Arguments filter criteria by substring:
//!
//! ```text
//! cargo test -p pathens-cli --test acceptance -- cliff
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use pathens_cli::compare::compare;
use pathens_cli::records::{read_csv, TabularRecord};
use pathens_cli::verify::verify;
use pathens_cli::{run, sweep, ExperimentConfig, RunOptions, RunOutput};
use pathens_core::advantage::{
    build_ensemble, estimator_gap, gae_all, k_step_advantage, order_statistic, AdvantageOutput, PathEnsemble, Statistic,
};
use pathens_core::agent::{policy_loss_and_grad, value_loss_and_grad, PolicyObjective, Sample, TrainConfig, Trainer};
use pathens_core::env::{make_cliff_with, make_fig1a, make_fig1b, make_fig1c, CliffConfig, StepRecord, Trajectory};
use pathens_core::nn::{finite_diff_check, log_softmax, DenseNet};
use pathens_core::tabular::{greedy_policy, policy_evaluation, statistic_q, value_iteration, TabularPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Kind);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str, out: &Path) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::load(&configs_dir().join(name)).map_err(|e| e.to_string())?;
    cfg.experiment.out = Some(out.to_path_buf());
    Ok(cfg)
}

fn run_config(name: &str, root: &Path) -> Result<PathBuf, String> {
    let out = root.join(name.trim_end_matches(".toml"));
    let cfg = load_config(name, &out)?;
    run(&cfg, &out, RunOptions { force: true, workers: None }).map_err(|e| e.to_string())?;
    Ok(out)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

fn fig1a_policy_iteration() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = run_config("fig1a-tabular.toml", root.path())?;
    let (_, rows): (_, Vec<TabularRecord>) = read_csv(&dir.join("tabular.csv")).map_err(|e| e.to_string())?;
    let get = |s: &str| rows.iter().find(|r| r.statistic == s).and_then(|r| r.iterations_to_optimal);
    ensure(get("max") == Some(1), format!("max: {:?}", get("max")))?;
    ensure(get("gae") == Some(2), format!("standard: {:?}", get("gae")))?;
    let report = verify(&dir).map_err(|e| e.to_string())?;
    ensure(report.ok(), format!("verify: {:?}", report.mismatches))?;
    Ok("max statistic 1 improvement, standard 2".into())
}

fn fig1_q_values() -> Outcome {
    let a = make_fig1a();
    let pa = TabularPolicy::uniform(&a);
    let (_, q) = policy_evaluation(&a, &pa).map_err(|e| e.to_string())?;
    let qa = statistic_q(&a, &pa, Statistic::Max, 10).map_err(|e| e.to_string())?;
    let b = make_fig1b();
    let pb = TabularPolicy::uniform(&b);
    let qb = statistic_q(&b, &pb, Statistic::Max, 10).map_err(|e| e.to_string())?;
    let got = [q.get(0, 0), q.get(0, 1), qa.get(0, 0), qa.get(0, 1), qb.get(0, 0), qb.get(0, 1)];
    let want = [0.0, 0.0, 0.0, 1.0, 0.5, 1.0];
    ensure(got.iter().zip(&want).all(|(g, w)| close(*g, *w)), format!("got {got:?}, want {want:?}"))?;
    Ok(format!("{got:?}"))
}

fn fig1b_failure_mode() -> Outcome {
    let b = make_fig1b();
    let pb = TabularPolicy::uniform(&b);
    let qmax = statistic_q(&b, &pb, Statistic::Max, 10).map_err(|e| e.to_string())?;
    let greedy = greedy_policy(&qmax);
    let (_, qstar) = value_iteration(&b, 1e-12, 10_000).map_err(|e| e.to_string())?;
    let optimal = if qstar.get(0, 0) > qstar.get(0, 1) { 0 } else { 1 };
    ensure(
        greedy.support(0) == vec![1 - optimal],
        format!("greedy support {:?}, optimal {optimal}", greedy.support(0)),
    )?;
    // exact evaluation of both deterministic choices at the start state
    let value_of = |a0: usize| -> Result<f64, String> {
        let mut actions = vec![0; b.n_states()];
        actions[0] = a0;
        let p = TabularPolicy::deterministic(&b, &actions);
        Ok(policy_evaluation(&b, &p).map_err(|e| e.to_string())?.0 .0[0])
    };
    let (v_opt, v_greedy) = (value_of(optimal)?, value_of(1 - optimal)?);
    ensure(v_opt > v_greedy, format!("V(optimal) {v_opt} <= V(greedy) {v_greedy}"))?;
    Ok(format!("max-greedy picks a{}, optimal a{}; exact values {v_greedy} < {v_opt}", 2 - optimal, optimal + 1))
}

fn fig1c_overestimation() -> Outcome {
    let margin = |c: f64| -> Result<f64, String> {
        let mdp = make_fig1c(c).map_err(|e| e.to_string())?;
        let p = TabularPolicy::uniform(&mdp);
        let (_, q) = policy_evaluation(&mdp, &p).map_err(|e| e.to_string())?;
        let qmax = statistic_q(&mdp, &p, Statistic::Max, 10).map_err(|e| e.to_string())?;
        Ok(qmax.get(0, 0) - q.get(0, 0))
    };
    // Under the uniform policy both chance states have value 0, so the partial
    // returns are r1 and r1 + r2 with r1, r2 = +-c; E[max] = E[max(0, r2)] = c / 2.
    let mut shown = Vec::new();
    for c in [4.0, 1.0, 0.25, 1e-3, 1e-6] {
        let m = margin(c)?;
        ensure(m > 0.0 && (m - c / 2.0).abs() < 1e-12, format!("c = {c}: margin {m}, expected {}", c / 2.0))?;
        shown.push(format!("{c}:{m}"));
    }
    ensure(margin(0.0)? == 0.0, "margin at c = 0 is not 0")?;
    Ok(format!("margin c/2 ({})", shown.join(", ")))
}

fn random_trajectory(rng: &mut ChaCha8Rng) -> (Trajectory, Vec<f64>, f64, f64) {
    let n_states = 10;
    let len = rng.random_range(1..60);
    let states: Vec<usize> = (0..=len).map(|_| rng.random_range(0..n_states)).collect();
    let steps = (0..len)
        .map(|i| StepRecord {
            state: states[i],
            action: 0,
            reward: rng.random_range(-10.0..10.0),
            next_state: states[i + 1],
            done: i + 1 == len,
        })
        .collect();
    let traj = if rng.random_bool(0.5) { Trajectory::truncated(steps) } else { Trajectory::terminal(steps) }.unwrap();
    let values = (0..n_states).map(|_| rng.random_range(-10.0..10.0)).collect();
    (traj, values, rng.random_range(0.8..1.0), rng.random_range(0.0..1.0))
}

fn estimator_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_gap, mut worst_gae) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (traj, values, gamma, lambda) = random_trajectory(&mut rng);
        let v = values.as_slice();
        for t in 0..traj.len() {
            let rem = traj.len() - t;
            for i in 1..rem {
                let j = rng.random_range(i + 1..=rem);
                let (lhs, rhs) = estimator_gap(&traj, t, i, j, v, gamma).map_err(|e| e.to_string())?;
                worst_gap = worst_gap.max((lhs - rhs).abs());
            }
        }
        let g = gae_all(&traj, v, gamma, lambda);
        for (t, &gt) in g.iter().enumerate() {
            let n = traj.len() - t;
            let mut mix =
                lambda.powi(n as i32 - 1) * k_step_advantage(&traj, t, n, v, gamma).map_err(|e| e.to_string())?;
            for k in 1..n {
                mix += (1.0 - lambda)
                    * lambda.powi(k as i32 - 1)
                    * k_step_advantage(&traj, t, k, v, gamma).map_err(|e| e.to_string())?;
            }
            worst_gae = worst_gae.max((gt - mix).abs());
        }
        let _ = build_ensemble(&traj, 0, &[1, 16, 64, 2048], v, gamma).map_err(|e| e.to_string())?;
    }
    ensure(worst_gap < 1e-10, format!("gap residual {worst_gap:e}"))?;
    ensure(worst_gae < 1e-10, format!("GAE telescoping residual {worst_gae:e}"))?;

    let mut violations = 0;
    for _ in 0..100_000 {
        let n = rng.random_range(1..10);
        let mut k = 0;
        let entries: Vec<(usize, f64)> = (0..n)
            .map(|_| {
                k += rng.random_range(1..100);
                // coarse grid so ties and sign-mirrored pairs occur
                (k, (rng.random_range(-20i32..=20) as f64) * 0.5)
            })
            .collect();
        let ens = PathEnsemble::new(0, entries).unwrap();
        let lo = ens.entries().iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        let hi = ens.entries().iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
        for stat in [Statistic::Max, Statistic::Min, Statistic::MaxAbs, Statistic::Order(rng.random_range(1..12))] {
            let (v, _) = order_statistic(&ens, stat).unwrap();
            if v < lo || v > hi {
                violations += 1;
            }
            if stat == Statistic::MaxAbs && v != lo && v != hi {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, format!("{violations} order-statistic violations"))?;
    Ok(format!("gap residual {worst_gap:.1e}, GAE residual {worst_gae:.1e}, 1e5 ensembles clean"))
}

fn sample(features: Vec<f64>, action: usize, behavior_log_prob: f64, advantage: f64, critic_target: f64) -> Sample {
    let estimate = AdvantageOutput {
        ensemble: PathEnsemble::new(0, vec![(1, advantage)]).unwrap(),
        value: 0.0,
        baseline_advantage: advantage,
        biased_advantage: advantage,
        chosen_k: 1,
        used_biased: false,
        mixed_advantage: advantage,
        critic_target,
    };
    Sample { state: 0, action, features, behavior_log_prob, estimate, advantage }
}

fn gradient_checks() -> Outcome {
    let mut worst = [0.0f64; 3];
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = DenseNet::init(&[4, 8, 3], 1.0, &mut rng);
        let value = DenseNet::init(&[4, 8, 1], 1.0, &mut rng);
        let mut samples = Vec::new();
        for i in 0..16 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let action = rng.random_range(0..3);
            let logp = log_softmax(&policy.forward(&x).map_err(|e| e.to_string())?.0)[action];
            // behavior log-probs inside and outside the clip range, away from its edges
            let offset = [0.0, 0.1, -0.1, 0.6, -0.6][i % 5];
            let advantage = rng.random_range(-2.0..2.0);
            samples.push(sample(x, action, logp - offset, advantage, rng.random_range(-3.0..3.0)));
        }
        let refs: Vec<&Sample> = samples.iter().collect();
        let objectives = [PolicyObjective::Vanilla, PolicyObjective::Clipped { epsilon: 0.2 }];
        for (slot, objective) in objectives.into_iter().enumerate() {
            let sizes = policy.sizes().to_vec();
            let f = |p: &[f64]| {
                let net = DenseNet::from_params(&sizes, p.to_vec()).unwrap();
                let (stats, g) = policy_loss_and_grad(&net, &refs, objective, 0.01).unwrap();
                (stats.loss, g)
            };
            worst[slot] = worst[slot].max(finite_diff_check(f, policy.params(), 1e-6).map_err(|e| e.to_string())?);
        }
        let sizes = value.sizes().to_vec();
        let f =
            |p: &[f64]| value_loss_and_grad(&DenseNet::from_params(&sizes, p.to_vec()).unwrap(), &refs, 0.5).unwrap();
        worst[2] = worst[2].max(finite_diff_check(f, value.params(), 1e-6).map_err(|e| e.to_string())?);
    }
    ensure(worst.iter().all(|w| *w < 1e-5), format!("max relative errors {worst:?}"))?;
    Ok(format!("policy {:.1e}, clipped {:.1e}, value {:.1e}", worst[0], worst[1], worst[2]))
}

fn zero_bias_ratio_equivalence() -> Outcome {
    let mut base = TrainConfig { updates: 30, rollout_length: 256, seed: 11, ..TrainConfig::default() };
    base.estimator.index_set = vec![1, 16, 64, 256];
    let env = || make_cliff_with(CliffConfig::default()).unwrap();
    let final_state = |cfg: TrainConfig| -> Result<(String, Vec<f64>, Vec<f64>), String> {
        let mut t = Trainer::new(env(), cfg.clone()).map_err(|e| e.to_string())?;
        let mut rows = String::new();
        for _ in 0..cfg.updates {
            rows += &format!("{:?}", t.step().map_err(|e| e.to_string())?.0);
        }
        Ok((rows, t.nets().policy.params().to_vec(), t.nets().value.params().to_vec()))
    };
    let reference = final_state(base.clone())?;
    for stat in [Statistic::Max, Statistic::Min, Statistic::MaxAbs, Statistic::Order(2), Statistic::Order(3)] {
        let mut cfg = base.clone();
        cfg.estimator.statistic = Some(stat);
        ensure(final_state(cfg)? == reference, format!("{stat} with bias ratio 0 diverged from the baseline"))?;
    }
    Ok("5 statistics x 30 updates bit-identical to baseline".into())
}

fn sparse_maze_claim() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = run_config("maze-baseline.toml", root.path())?;
    let max = run_config("maze-max.toml", root.path())?;
    let min = run_config("maze-min.toml", root.path())?;
    let vs_max = compare(&base, &max).map_err(|e| e.to_string())?;
    let vs_min = compare(&base, &min).map_err(|e| e.to_string())?;
    let detail = format!(
        "first success median baseline {} / max {} / min {}; max faster on {}, slower on {}, p = {:.4}; min faster on {}, slower on {}, p = {:.4}",
        vs_max.first_a.median,
        vs_max.first_b.median,
        vs_min.first_b.median,
        vs_max.first_test.negative,
        vs_max.first_test.positive,
        vs_max.first_test.p_value,
        vs_min.first_test.negative,
        vs_min.first_test.positive,
        vs_min.first_test.p_value,
    );
    let max_better = vs_max.first_b.median < vs_max.first_a.median && vs_max.first_test.p_value < 0.05;
    let min_better = vs_min.first_b.median < vs_min.first_a.median && vs_min.first_test.p_value < 0.05;
    ensure(max_better && !min_better, detail.clone())?;
    Ok(detail)
}

fn fragile_cliff_claim() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = run_config("cliff-baseline.toml", root.path())?;
    let min = run_config("cliff-min.toml", root.path())?;
    let c = compare(&base, &min).map_err(|e| e.to_string())?;
    let detail = format!(
        "final return median baseline {:.3} / min {:.3}; min higher on {}, lower on {}, tied on {}, p = {:.4}",
        c.final_a.median,
        c.final_b.median,
        c.final_test.positive,
        c.final_test.negative,
        c.final_test.ties,
        c.final_test.p_value
    );
    ensure(c.final_b.median > c.final_a.median && c.final_test.p_value < 0.05, detail.clone())?;
    Ok(detail)
}

fn ablation_harness() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = root.path().join("ablation");
    let cfg = load_config("ablation-smoke.toml", &out)?;
    let grid = sweep(&cfg, &out, RunOptions { force: true, workers: None }).map_err(|e| e.to_string())?;
    ensure(grid.len() == 20, format!("{} cells", grid.len()))?;
    let report = verify(&out).map_err(|e| e.to_string())?;
    ensure(report.ok(), format!("{} mismatches: {:?}", report.mismatches.len(), report.mismatches))?;
    // one cell rerun on its own reproduces the sweep's curves
    let cell_dir = out.join("cells").join(&grid[7].cell);
    let cell_cfg = ExperimentConfig::load(&cell_dir.join("config.toml")).map_err(|e| e.to_string())?;
    let alone = root.path().join("alone");
    match run(&cell_cfg, &alone, RunOptions::default()).map_err(|e| e.to_string())? {
        RunOutput::Train(_) => {}
        RunOutput::Tabular(_) => return Err("unexpected tabular output".into()),
    }
    for seed in &cell_cfg.experiment.seeds {
        let name = format!("curves/seed_{seed}.csv");
        let a = std::fs::read(cell_dir.join(&name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(alone.join(&name)).map_err(|e| e.to_string())?;
        ensure(a == b, format!("{name} differs between sweep cell and standalone run"))?;
    }
    Ok(format!("20 cells, {} summary values re-derived, 0 mismatches", report.checked))
}

/// Reported, not asserted: 4-element against 12-element index sets on the cliff.
fn ensemble_size_report() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = root.path().join("small");
    let small = load_config("cliff-min.toml", &out)?;
    let mut small = small;
    small.experiment.seeds = (0..8).collect();
    small.train.updates = 200;
    let mut large = small.clone();
    large.experiment.name = "cliff-min-12".into();
    large.estimator.index_set = Some(vec![1, 2, 4, 8, 12, 16, 24, 32, 48, 64, 128, small.train.rollout_length]);
    let large_out = root.path().join("large");
    run(&small, &out, RunOptions { force: true, workers: None }).map_err(|e| e.to_string())?;
    run(&large, &large_out, RunOptions { force: true, workers: None }).map_err(|e| e.to_string())?;
    let c = compare(&out, &large_out).map_err(|e| e.to_string())?;
    Ok(format!(
        "final return median 4-element {:.3} / 12-element {:.3}; 12-element higher on {}, lower on {}, p = {:.4} (not asserted)",
        c.final_a.median, c.final_b.median, c.final_test.positive, c.final_test.negative, c.final_test.p_value
    ))
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    /// Deterministic or tolerance-bounded; a failure fails the suite.
    Exact,
    /// Seed-level training comparison; fails the suite only in strict mode.
    Statistical,
    /// Printed for reference, never asserted.
    Report,
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let strict = std::env::var_os("PATHENS_ACCEPTANCE_STRICT").is_some_and(|v| v != "0");
    let criteria: Vec<Criterion> = vec![
        ("fig1a policy iteration steps (max 1, standard 2)", fig1a_policy_iteration, Kind::Exact),
        ("fig1a/fig1b start-state Q values", fig1_q_values, Kind::Exact),
        ("fig1b max-statistic reversal", fig1b_failure_mode, Kind::Exact),
        ("fig1c overestimation margin", fig1c_overestimation, Kind::Exact),
        ("estimator identities", estimator_identities, Kind::Exact),
        ("gradient checks", gradient_checks, Kind::Exact),
        ("bias ratio 0 equivalence", zero_bias_ratio_equivalence, Kind::Exact),
        ("sparse maze first success (max vs baseline, min not better)", sparse_maze_claim, Kind::Statistical),
        ("cliff final return (min vs baseline)", fragile_cliff_claim, Kind::Statistical),
        ("ablation sweep and verify", ablation_harness, Kind::Exact),
        ("index set size on cliff", ensemble_size_report, Kind::Report),
    ];
    let (mut hard, mut soft) = (0, 0);
    for (name, check, kind) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match (outcome, kind) {
            (Ok(detail), Kind::Report) => println!("INFO  {name}  [{secs:.1}s]  {detail}"),
            (Ok(detail), _) => println!("PASS  {name}  [{secs:.1}s]  {detail}"),
            (Err(detail), kind) => {
                if kind == Kind::Exact {
                    hard += 1;
                } else {
                    soft += 1;
                }
                println!("FAIL  {name}  [{secs:.1}s]  {detail}");
            }
        }
    }
    if soft > 0 {
        println!("{soft} statistical criteria failed (set PATHENS_ACCEPTANCE_STRICT=1 to make this fatal)");
    }
    if hard > 0 || (strict && soft > 0) {
        println!("{} criteria failed", hard + soft);
        std::process::exit(1);
    }
}
