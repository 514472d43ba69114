//! End-to-end runs of the `bussched` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bussched::milp::{build_milp, solution_from_schedule, solution_to_string};
use bussched::schedule::load_schedule;
use bussched::*;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bussched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares with a golden file; `BUSSCHED_BLESS=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("BUSSCHED_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap();
    assert!(want == actual, "{name} differs from its golden file");
}

fn generate(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut all = vec!["generate"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["-o", path.to_str().unwrap()]);
    ok(&all);
    path
}

fn error_line(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

#[test]
fn generate_then_greedy_gives_a_valid_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = generate(dir.path(), "i.json", &["--m", "4", "--cores", "2", "--order", "trivial", "--seed", "1"]);
    let sched_path = dir.path().join("s.json");
    ok(&["greedy", inst_path.to_str().unwrap(), "-o", sched_path.to_str().unwrap()]);
    let inst: Instance64 = load_instance(&inst_path).unwrap();
    let sched: Schedule64 = load_schedule(&sched_path).unwrap();
    sched.validate(&inst).unwrap();
    assert_eq!(sched, greedy_schedule(&inst).unwrap());
}

#[test]
fn generate_is_deterministic() {
    let args = ["generate", "--m", "6", "--cores", "3", "--order", "random", "--seed", "9"];
    let a = ok(&args).stdout;
    let b = ok(&args).stdout;
    assert_eq!(a, b);
    let inst: Instance64 = bussched::instance::instance_from_json(std::str::from_utf8(&a).unwrap()).unwrap();
    let want: Instance64 = gen_instance(6, 3, OrderKind::Random, 9, 1.0..=100.0, 0.0..=100.0).unwrap();
    assert_eq!(inst, want);
}

#[test]
fn exact_is_never_worse_than_greedy() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", &["--m", "5", "--cores", "2", "--order", "bitree", "--seed", "3"]);
    let inst = inst.to_str().unwrap();
    let g: Schedule64 = serde_json::from_slice(&ok(&["greedy", inst]).stdout).unwrap();
    for strategy in ["auto", "sets", "sequences"] {
        let e: Schedule64 = serde_json::from_slice(&ok(&["exact", inst, "--strategy", strategy]).stdout).unwrap();
        assert!(g.makespan >= e.makespan - 1e-9);
    }
}

#[test]
fn milp_export_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", &["--m", "3", "--cores", "2", "--order", "random", "--seed", "1"]);
    let lp = dir.path().join("i.lp");
    let meta = dir.path().join("i.meta.json");
    let args = [
        "milp-export",
        inst.to_str().unwrap(),
        "-o",
        lp.to_str().unwrap(),
        "--metadata",
        meta.to_str().unwrap(),
    ];
    ok(&args);
    let first = fs::read_to_string(&lp).unwrap();
    ok(&args);
    assert_eq!(fs::read_to_string(&lp).unwrap(), first);
    check_golden("m3_random_seed1.lp", &first);
    let meta: Value = serde_json::from_str(&fs::read_to_string(&meta).unwrap()).unwrap();
    assert!(meta.is_object());
}

#[test]
fn milp_solution_becomes_a_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = generate(dir.path(), "i.json", &["--m", "4", "--cores", "2", "--order", "random", "--seed", "2"]);
    let inst: Instance64 = load_instance(&inst_path).unwrap();
    let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP).unwrap();
    let model = build_milp(&inst, &space).unwrap();
    let best = exact_makespan(&inst).unwrap();
    let sol = solution_from_schedule(&model, &best).unwrap();
    let sol_path = dir.path().join("sol.txt");
    fs::write(&sol_path, solution_to_string(&model, &sol)).unwrap();
    let out = ok(&["milp-schedule", inst_path.to_str().unwrap(), sol_path.to_str().unwrap()]);
    let sched: Schedule64 = serde_json::from_slice(&out.stdout).unwrap();
    sched.validate(&inst).unwrap();
    assert!((sched.makespan - best.makespan).abs() <= 1e-6);
}

#[test]
fn simulate_without_noise_reproduces_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", &["--m", "6", "--cores", "3", "--order", "random", "--seed", "4"]);
    let sched = dir.path().join("s.json");
    ok(&["greedy", inst.to_str().unwrap(), "-o", sched.to_str().unwrap()]);
    let rep: Value = serde_json::from_slice(&ok(&["simulate", inst.to_str().unwrap(), sched.to_str().unwrap()]).stdout).unwrap();
    let planned = rep["planned_makespan"].as_f64().unwrap();
    let measured = rep["measured_makespan"].as_f64().unwrap();
    assert!((planned - measured).abs() <= 1e-9 * planned);

    let noisy = ["simulate", inst.to_str().unwrap(), sched.to_str().unwrap(), "--noise", "0.1", "--noise-seed", "5"];
    let a = ok(&noisy).stdout;
    assert_eq!(a, ok(&noisy).stdout);
    let rep: Value = serde_json::from_slice(&a).unwrap();
    assert!(rep["deviation_pct"].as_f64().unwrap() != 0.0);
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let schema = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (schema, rows)
}

#[test]
fn compare_small_preset_writes_versioned_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    ok(&["compare", "--preset", "small", "--noise", "0", "--out-dir", out_dir.to_str().unwrap()]);

    for (file, schema) in [
        ("samples.csv", "#schema=bussched.samples.v1"),
        ("ratio_boxplot.csv", "#schema=bussched.ratio_boxplot.v1"),
        ("deviation_histogram.csv", "#schema=bussched.deviation_histogram.v1"),
        ("runtime.csv", "#schema=bussched.runtime.v1"),
    ] {
        assert_eq!(csv_rows(&out_dir.join(file)).0, schema);
    }

    let (_, samples) = csv_rows(&out_dir.join("samples.csv"));
    let header = &samples[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(samples.len() - 1, 2 * 2 * 4 * 2);
    for row in &samples[1..] {
        let r: f64 = row[col("ratio")].parse().unwrap();
        assert!(r >= 1.0 - 1e-9);
        let d: f64 = row[col("greedy_deviation_pct")].parse().unwrap();
        assert!(d.abs() <= 1e-7);
    }
    let (_, hist) = csv_rows(&out_dir.join("deviation_histogram.csv"));
    assert_eq!(hist.len(), 2, "all deviations fall in the first bin");

    for file in ["samples.csv", "ratio_boxplot.csv", "deviation_histogram.csv"] {
        check_golden(&format!("compare_small_{file}"), &fs::read_to_string(out_dir.join(file)).unwrap());
    }
    let (_, runtime) = csv_rows(&out_dir.join("runtime.csv"));
    assert_eq!(
        runtime[0].join(","),
        "m,cores,instances,greedy_mean_s,greedy_max_s,exact_solved,exact_mean_s,exact_max_s"
    );
}

#[test]
fn bench_reports_model_sizes() {
    let out = ok(&["bench", "--jobs", "4", "--core-counts", "2,3", "--orders", "trivial,random"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "#schema=bussched.bench.v1");
    assert_eq!(
        lines.next().unwrap(),
        "m,cores,order,seed,configurations,milp_variables,milp_constraints,greedy_s,exact_s,exact_nodes"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let missing = run(&["greedy", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
    assert_eq!(error_line(&missing)["error"], "missing_input");

    let big = generate(dir.path(), "big.json", &["--m", "9", "--cores", "2"]);
    let guard = run(&["exact", big.to_str().unwrap()]);
    assert_eq!(guard.status.code(), Some(4));
    assert_eq!(error_line(&guard)["error"], "guard");

    let conflict = run(&["compare", "--preset", "small", "--jobs", "4"]);
    assert_eq!(conflict.status.code(), Some(5));
    assert_eq!(error_line(&conflict)["error"], "flag_conflict");

    let usage = run(&["greedy", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_line(&usage)["error"], "usage");

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"version\": 1}").unwrap();
    let invalid = run(&["greedy", bad.to_str().unwrap()]);
    assert_eq!(invalid.status.code(), Some(6));
    assert_eq!(error_line(&invalid)["error"], "invalid_input");

    let codes: std::collections::BTreeSet<_> = [&missing, &guard, &conflict, &usage, &invalid]
        .iter()
        .map(|o| o.status.code())
        .collect();
    assert_eq!(codes.len(), 5);
}
