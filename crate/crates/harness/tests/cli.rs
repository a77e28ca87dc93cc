use std::path::Path;
use std::process::Command;

use paradiag_harness::cli::main_with_args;
use paradiag_harness::{run_experiment, Experiment, ExperimentConfig, ResultTable, Value};

fn harness(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_paradiag-harness")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn describe_lists_and_prints_defaults() {
    let out = harness(&["describe"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for exp in Experiment::ALL {
        assert!(text.contains(exp.name()), "{}", exp.name());
    }
    let out = harness(&["describe", "optctrl", "--set", "tol=1e-9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tol = 1e-9"));
    assert!(text.contains("gammas = 0.01, 0.0001, 1e-6, 1e-8, 1e-10"));
}

#[test]
fn exit_code_two_for_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    for args in [
        vec!["cond-study", "--out", &o, "--set", "bogus=1"],
        vec!["cond-study", "--out", &o, "--set", "nts=zero"],
        vec!["cond-study", "--out", &o, "--config", "/nonexistent/file.conf"],
        vec!["describe", "no-such-experiment"],
        vec!["no-such-subcommand"],
    ] {
        let out = harness(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = harness(&["cond-study", "--out", &o, "--set", "bogus=1"]);
    assert!(String::from_utf8(out.stderr).unwrap().contains("key 'bogus': unknown key"));
}

#[test]
fn exit_code_three_for_required_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let args = ["ade-wr", "--out", &o, "--set", "maxit=1", "--set", "cells=16", "--set", "nt=8", "--set", "nus=0.01"];
    let out = harness(&args);
    assert_eq!(out.status.code(), Some(3));
    // The table is still written.
    assert!(dir.path().join("ade-wr.csv").exists());
    let mut lenient: Vec<&str> = args.to_vec();
    lenient.extend(["--set", "required=false"]);
    assert_eq!(harness(&lenient).status.code(), Some(0));
}

#[test]
fn empty_run_list_succeeds_with_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let code = main_with_args(["paradiag-harness", "run", "--out", o.as_str(), "--set", "experiments="]);
    assert_eq!(code, 0);
    let summary = ResultTable::read_csv(&dir.path().join("run.csv")).unwrap();
    assert!(summary.is_empty());
    assert_eq!(summary.columns(), ["experiment", "rows", "converged"]);
}

#[test]
fn run_executes_listed_experiments_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("plan.conf");
    std::fs::write(&conf, "experiments = cond-study, spectrum-probe\nnts = 8, 16\nsizes = 6x5\nalphas = 0.2\n").unwrap();
    let o = out_arg(&dir.path().join("out"));
    let code = main_with_args(["paradiag-harness", "run", "--config", conf.to_str().unwrap(), "--out", o.as_str()]);
    assert_eq!(code, 0);
    let summary = ResultTable::read_csv(&dir.path().join("out/run.csv")).unwrap();
    assert_eq!(summary.len(), 2);
    assert_eq!(summary.rows()[1][0], Value::Text("spectrum-probe".into()));
    for f in ["cond-study.csv", "cond-study.svg", "cond-study_metrics.csv", "spectrum-probe.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn written_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg =
        ExperimentConfig::resolve(Experiment::NonlinearDemo, None, &["nt=8".to_string(), "thetas=1".to_string()]).unwrap();
    cfg.out = dir.path().to_path_buf();
    let out = paradiag_harness::run_and_write(&cfg).unwrap();
    let back = ResultTable::read_csv(&dir.path().join("nonlinear-demo.csv")).unwrap();
    assert_eq!(back, out.table);
    let history = ResultTable::read_csv(&dir.path().join("nonlinear-demo_history.csv")).unwrap();
    assert_eq!(Some(history), out.history);
    let svg = std::fs::read_to_string(dir.path().join("nonlinear-demo.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn plot_can_be_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let out = harness(&["cond-study", "--out", &o, "--set", "nts=8,16", "--set", "plot=false"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("cond-study.csv").exists());
    assert!(!dir.path().join("cond-study.svg").exists());
}

fn without_time(t: &ResultTable) -> Vec<Vec<Value>> {
    let skip = t.column_index("time");
    t.rows()
        .iter()
        .map(|r| r.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, v)| v.clone()).collect())
        .collect()
}

fn assert_reproduced(a: &ResultTable, b: &ResultTable) {
    assert_eq!(a.columns(), b.columns());
    for (ra, rb) in without_time(a).iter().zip(without_time(b)) {
        for (x, y) in ra.iter().zip(&rb) {
            match (x, y) {
                (Value::Float(x), Value::Float(y)) => {
                    assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()), "{x} vs {y}")
                }
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn same_seed_reproduces_results() {
    for (exp, sets) in [
        (Experiment::AdeWr, vec!["cells=32", "nt=16", "nus=0.01, 0.0001", "thetas=1, 0.5"]),
        (Experiment::PararealCompare, vec!["cells=32", "t_final=1", "coarse_dt=0.125", "substeps=4", "fine=sdirk2"]),
    ] {
        let sets: Vec<String> = sets.into_iter().map(String::from).collect();
        let a = run_experiment(&ExperimentConfig::resolve(exp, None, &sets).unwrap()).unwrap();
        let b = run_experiment(&ExperimentConfig::resolve(exp, None, &sets).unwrap()).unwrap();
        assert_reproduced(&a.table, &b.table);
        assert_reproduced(a.history.as_ref().unwrap(), b.history.as_ref().unwrap());
    }
}

#[test]
fn different_seed_changes_the_initial_guess() {
    let run = |seed: &str| {
        let cfg = ExperimentConfig::resolve(
            Experiment::AdeWr,
            None,
            &["cells=32".into(), "nt=16".into(), format!("seed={seed}")],
        )
        .unwrap();
        run_experiment(&cfg).unwrap().table.floats("initial_error").unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn scaling_bench_one_thread_is_the_baseline() {
    let cfg = ExperimentConfig::resolve(
        Experiment::ScalingBench,
        None,
        &["dim=1".into(), "cells=64".into(), "nt=16".into(), "thread_counts=1, 2".into()],
    )
    .unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.metric("speedup_1"), Some(1.0));
    assert!(out.metric("max_diff_one_thread").unwrap() <= 1e-12);
    let speedups = out.table.floats("speedup").unwrap();
    assert_eq!(speedups[0], Some(1.0));
}
