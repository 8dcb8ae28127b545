use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn regnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regnet")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = regnet(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", "--seed", "7", "--out", p(dir), "--genes", "20", "--regulators", "5"];
    args.extend_from_slice(extra);
    ok(&args);
}

fn data_args(dir: &Path) -> Vec<String> {
    let mut v = vec![
        "--targets".to_string(),
        dir.join("targets.csv").display().to_string(),
        "--regulators".to_string(),
        dir.join("regulators.csv").display().to_string(),
    ];
    for k in 1..=2 {
        v.push("--scores".into());
        v.push(dir.join(format!("source{k}.csv")).display().to_string());
    }
    v
}

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate(a.path(), &[]);
    simulate(b.path(), &[]);
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn bad_invocations_fail() {
    assert_eq!(regnet(&["simulate", "--seed", "1", "--out", "x", "--bogus"]).status.code(), Some(2));
    assert_eq!(regnet(&["run", "--seed", "1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let out = dir.path().join("run");
    let mut args = vec!["run".to_string(), "--seed".into(), "1".into(), "--out".into(), out.display().to_string()];
    args.extend(data_args(dir.path()));
    args.extend(["--e-sigma", "0.5", "--time-dependent", "--iterations", "10", "--burn-in", "0"].map(String::from));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let res = regnet(&refs);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
}

#[test]
fn fdr_reports_the_constructed_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let last = 1.0 - (88.0 * 0.075 - 87.0 * (1.0 - 0.925));
    let mut text = String::from("target,r1,r2\n");
    for g in 0..87 {
        text += &format!("g{g},0.925,0.1\n");
    }
    text += &format!("g87,{last},0.5\ng88,0.79,0\n");
    fs::write(&path, text).unwrap();
    let out = ok(&["fdr", "--p", p(&path), "--cutoff", "0.8"]);
    assert_eq!(out.trim(), "cutoff 0.8: 88 edges, Bayesian FDR 7.5%");
    let out = ok(&["fdr", "--p", p(&path), "--cutoff", "0.8", "--curve", "0.5,0.95", "--list"]);
    assert!(out.contains("0.95\t0\t0"));
    assert_eq!(out.lines().filter(|l| l.starts_with('g')).count(), 88);
}

#[test]
fn run_summarize_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let run = |out: &Path, halt: Option<&str>| {
        let mut args = vec!["run".to_string(), "--seed".into(), "3".into(), "--out".into(), out.display().to_string()];
        args.extend(data_args(dir.path()));
        args.extend(["--e-sigma", "0.5", "--iterations", "3000", "--burn-in", "1000", "--checkpoint-every", "500"].map(String::from));
        if let Some(h) = halt {
            args.extend(["--halt-at".to_string(), h.to_string()]);
        }
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&refs)
    };
    let whole = dir.path().join("whole");
    run(&whole, None);
    let truth = dir.path().join("truth_beta.csv");
    let out = ok(&["summarize", "--run", p(&whole), "--truth", p(&truth)]);
    let auc: f64 = out.lines().find_map(|l| l.strip_prefix("AUC vs truth ")).unwrap().parse().unwrap();
    assert!(auc > 0.9, "{out}");
    assert!(whole.join("summary/edges.tsv").exists() && whole.join("summary/network.dot").exists());

    let split = dir.path().join("split");
    assert!(run(&split, Some("1700")).contains("halted"));
    ok(&["run", "--resume", p(&split)]);
    for i in 0..2 {
        let name = format!("chain_{i}.trace.json");
        assert_eq!(fs::read(whole.join(&name)).unwrap(), fs::read(split.join(&name)).unwrap());
    }
    ok(&["summarize", "--run", p(&split)]);
    assert_eq!(fs::read(whole.join("summary/summary.json")).unwrap(), fs::read(split.join("summary/summary.json")).unwrap());
}

#[test]
fn verify_and_tune_run() {
    let out = ok(&["verify", "--cases", "4", "--chain-iterations", "40000"]);
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let mut args = vec!["tune".to_string()];
    args.extend(data_args(dir.path()));
    args.extend(["--iterations", "300", "--burn-in", "100", "--tau-grid", "0.01,1", "--e-grid", "0.5"].map(String::from));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(ok(&refs).lines().count(), 3);
}
