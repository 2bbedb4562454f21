use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn affgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affgd"))
        .args(args)
        .env_remove("AFFGD_SEED")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = affgd(&["run", "--iters", "100", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let summary = stdout(&o);
    assert!(summary.starts_with("final_gap="), "{summary}");
    assert!(summary.contains("status=grad_tol_reached"));

    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,f,gap,grad_norm,alpha,gamma,active_bound,cum_alpha"));
    assert_eq!(csv.lines().last(), Some("# status=grad_tol_reached"));
    assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn quadratic_run_to_stdout() {
    let o = affgd(&["run", "--problem", "quadratic", "--controller", "gd", "--step-scale", "0.5", "--iters", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    // header, k = 0..=10, status line
    assert_eq!(text.lines().count(), 13);
    assert!(String::from_utf8_lossy(&o.stderr).contains("status=budget_exhausted"));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = affgd(&["run", "--gamma-mode", "adaptive", "--gamma", "0.95", "--iters", "300", "--out", s(p)]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn seed_flag_and_env_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("flag.csv");
    let b = dir.path().join("env.csv");
    let c = dir.path().join("default.csv");
    affgd(&["run", "--seed", "7", "--iters", "20", "--out", s(&a)]);
    let o = Command::new(env!("CARGO_BIN_EXE_affgd"))
        .args(["run", "--iters", "20", "--out", s(&b)])
        .env("AFFGD_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    affgd(&["run", "--iters", "20", "--out", s(&c)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# shared settings\ncontroller = gd\niters = 5\nstep_scale = 0.5\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    affgd(&["run", "--config", s(&cfg), "--out", s(&a)]);
    let o = affgd(&["run", "--config", s(&cfg), "--iters", "8", "--out", s(&b)]);
    assert!(stdout(&o).contains("iters=8"), "{}", stdout(&o));
    let a = fs::read_to_string(&a).unwrap();
    assert!(a.lines().any(|l| l.starts_with("5,")));
    assert!(!a.lines().any(|l| l.starts_with("6,")));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(affgd(&["run", "--controller", "nope"]).status.code(), Some(1));
    assert_eq!(affgd(&["run", "--gamma", "1.5"]).status.code(), Some(1));
    assert_eq!(affgd(&["run", "--problem", "quadratic", "--quad-diag", "1,x"]).status.code(), Some(1));
    assert_eq!(affgd(&["run", "--config", "/nonexistent/affgd.cfg"]).status.code(), Some(1));
    assert_eq!(affgd(&["--help"]).status.code(), Some(0));
}

#[test]
fn divergence_exits_two() {
    let o = affgd(&["run", "--problem", "quadratic", "--controller", "gd", "--step-scale", "3", "--iters", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("status=diverged"));
}

#[test]
fn large_open_loop_steps_do_not_converge() {
    let o = affgd(&["run", "--controller", "gd", "--step-scale", "40", "--iters", "2000", "--out", "/dev/null"]);
    let text = stdout(&o);
    let gap: f64 = text
        .split_whitespace()
        .find_map(|t| t.strip_prefix("final_gap="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap > 1e-2, "{text}");
}

#[test]
fn compare_writes_one_csv_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = affgd(&["compare", "--suite", "fig3", "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5, "{names:?}");
    assert!(names.contains(&"fig3_gaps.csv".to_string()));
    let gaps = fs::read_to_string(dir.path().join("fig3_gaps.csv")).unwrap();
    assert_eq!(gaps.lines().next().unwrap().split(',').count(), 5);
}

#[test]
fn verify_generates_and_passes_natural_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = affgd(&["verify", "--suite", "all", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(&out).unwrap();
    assert_eq!(report.lines().next(), Some("inequality,iters_checked,iters_skipped,max_residual,tolerance,verdict"));
    assert!(report.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn verify_reports_violated_hypotheses() {
    // AFFGD steps leave the global (0, 2/L_s) window, so the global-smoothness suite does not apply
    let o = affgd(&["verify", "--suite", "thm1", "--controller", "affgd"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("hypotheses_violated"), "{err}");
}

#[test]
fn dataset_export() {
    let o = affgd(&["dataset", "--n-samples", "10", "--n-features", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("label,f1,f2,f3"));
    assert_eq!(text.lines().count(), 11);
}
