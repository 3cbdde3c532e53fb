//! End-to-end behavior of the `pathens` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pathens_cli::compare::compare;
use pathens_cli::records::{read_csv, DiagnosticRecord, SeedRecord};

const SMALL: &str = r#"
[experiment]
name = "small"
seeds = [0, 1, 2]
diagnose_updates = [0, 2]
final_window = 2

[env]
name = "cliff"
length = 6
horizon = 50

[train]
updates = 4
rollout_length = 128
hidden = [16, 16]

[estimator]
index_set = [1, 16, 64, 128]
"#;

fn pathens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathens")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_small(dir: &Path, name: &str, text: &str) -> PathBuf {
    let cfg = write_config(dir, &format!("{name}.toml"), text);
    let out = dir.join(name);
    let res = pathens(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    out
}

#[test]
fn run_then_verify_and_refuse_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), "small", SMALL);
    for f in ["config.toml", "summary.csv", "aggregate.csv", "curves/seed_0.csv", "diagnostics/seed_1_update_2.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let header = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(header.starts_with("# pathens-summary format=1 version="), "{header}");
    assert_eq!(code(&pathens(&["verify", out.to_str().unwrap()])), 0);

    let cfg = tmp.path().join("small.toml");
    let again = pathens(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&again), 4);
    let forced = pathens(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--force",
        "--seeds",
        "1..3",
    ]);
    assert_eq!(code(&forced), 0);
    let (_, seeds): (_, Vec<SeedRecord>) = read_csv(&out.join("summary.csv")).unwrap();
    assert_eq!(seeds.iter().map(|s| s.seed).collect::<Vec<_>>(), vec![1, 2]);
}

#[test]
fn tampered_summary_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_small(tmp.path(), "small", SMALL);
    let path = out.join("curves/seed_1.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // bump the episode count of the last row so the final return changes
    let last = lines.last_mut().unwrap();
    let mut fields: Vec<String> = last.split(',').map(String::from).collect();
    fields[2] = "123.5".into();
    *last = fields.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let res = pathens(&["verify", out.to_str().unwrap()]);
    assert_eq!(code(&res), 6, "{}", String::from_utf8_lossy(&res.stdout));
}

#[test]
fn config_errors_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("empty_seeds", SMALL.replace("seeds = [0, 1, 2]", "seeds = []")),
        ("unknown_field", SMALL.replace("[train]", "[train]\nlearning_rat = 0.1")),
        ("bad_statistic", SMALL.replace("[estimator]", "[estimator]\nstatistic = \"median\"")),
        ("bad_ratio", SMALL.replace("[estimator]", "[estimator]\nstatistic = \"max\"\nbias_ratio = 1.5")),
        ("bad_env", SMALL.replace("name = \"cliff\"", "name = \"lava\"")),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), &format!("{name}.toml"), &text);
        let out = tmp.path().join(name);
        let res = pathens(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&res), 3, "{name}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!out.exists(), "{name} created output");
    }
    let missing = pathens(&["run", "--config", tmp.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(code(&missing), 4);
    assert_eq!(code(&pathens(&["run"])), 2);
}

#[test]
fn compare_against_itself_finds_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_small(tmp.path(), "a", SMALL);
    let c = compare(&a, &a).unwrap();
    assert_eq!((c.final_test.positive, c.final_test.negative), (0, 0));
    assert_eq!(c.final_test.p_value, 1.0);
    assert_eq!(c.final_a, c.final_b);
    let res = pathens(&["compare", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
}

#[test]
fn compare_rejects_different_environments() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_small(tmp.path(), "a", SMALL);
    let b = run_small(
        tmp.path(),
        "b",
        &SMALL.replace(
            "name = \"cliff\"\nlength = 6\nhorizon = 50",
            "name = \"maze\"\nwidth = 5\nheight = 5\nhorizon = 30",
        ),
    );
    let res = pathens(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&res), 3);
}

#[test]
fn diagnose_zero_bias_run_never_uses_biased_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("[estimator]", "[estimator]\nstatistic = \"maxabs\"\nbias_ratio = 0.0");
    let out = run_small(tmp.path(), "zero", &text);
    let dump = tmp.path().join("dump.csv");
    let res =
        pathens(&["diagnose", out.to_str().unwrap(), "--update", "2", "--seed", "1", "--out", dump.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let (_, rows): (_, Vec<DiagnosticRecord>) = read_csv(&dump).unwrap();
    assert_eq!(rows.len(), 128);
    assert!(rows.iter().all(|r| !r.used_biased && r.mixed == r.gae));
    let missing = pathens(&["diagnose", out.to_str().unwrap(), "--update", "1"]);
    assert_eq!(code(&missing), 3);
}

#[test]
fn sweep_cells_match_standalone_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[sweep]\nstatistics = [\"min\", \"order(2)\"]\nbias_ratios = [0.5]\n");
    let cfg = write_config(tmp.path(), "grid.toml", &text);
    let out = tmp.path().join("grid");
    let res = pathens(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(code(&pathens(&["verify", out.to_str().unwrap()])), 0);

    let alone = run_small(
        tmp.path(),
        "alone",
        &SMALL.replace("[estimator]", "[estimator]\nstatistic = \"order(2)\"\nbias_ratio = 0.5"),
    );
    for seed in 0..3 {
        let name = format!("curves/seed_{seed}.csv");
        let body = |p: PathBuf| std::fs::read_to_string(p).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
        assert_eq!(body(out.join("cells/order2_rho0.5").join(&name)), body(alone.join(&name)), "{name}");
    }
}

#[test]
fn tabular_run_reports_iterations() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig1b-tabular.toml");
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig1b");
    let res = pathens(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("max        iterations_to_optimal = never"), "{stdout}");
    assert_eq!(code(&pathens(&["verify", out.to_str().unwrap()])), 0);
}
