//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N ... PASS|FAIL` line (run with `--nocapture` to see them) and
//! then asserts.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use affgd_core::certify::{
    check_affgd_constraints, check_cocoercivity, check_descent_lemma, check_grad_monotonicity,
    check_halfrange_vs, check_rate_bound, check_recursion_replay, check_stepsize_separation,
    check_theorem1_rates, check_va_decrease, check_vp_decrease, check_vs_decrease, CertReport, Tolerance,
};
use affgd_core::controllers::{ControllerSpec, GammaSchedule, DEFAULT_BLS_CAP, DEFAULT_HORIZON_SCALE};
use affgd_core::engine::{compare_runs, run_on, Problem, ProblemSpec, RunConfig, RunStatus, Trajectory};
use affgd_core::geometry::{grid_search_alpha1, solve_alpha1, LinesearchOptions, DEFAULT_SHRINK};
use affgd_core::problems::finite_diff_gradient;
use affgd_core::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;
/// Relative certificate tolerance; the absolute floor absorbs round-off near the optimum.
const TOL: Tolerance = Tolerance { abs: 1e-10, rel: 1e-9 };
const SEPARATION_FACTOR: f64 = 0.9;
const LEMMA1_BUDGET: Duration = Duration::from_secs(5);
const THM2_BUDGET: Duration = Duration::from_secs(10);
const THM1_BUDGET: Duration = Duration::from_secs(2);
const ROBUST_GAMMA: f64 = 0.99;
const ROBUST_CONVERGED_GAP: f64 = 1e-6;
const ROBUST_FAILED_GAP: f64 = 1e-2;
const FAST_GAP: f64 = 1e-8;
const ADAPTIVE_SLOWDOWN: f64 = 1.2;
const FD_REL_ERR: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;
const GRID_POINTS: usize = 2000;
const COCOERCIVITY_TOL: f64 = 1e-9;

fn report(n: u32, name: &str, ok: bool, detail: impl AsRef<str>) {
    println!("criterion {n} {name:<28} {} {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
}

fn summary(r: &CertReport) -> String {
    format!(
        "{}: {} checked, {} violations, worst residual {:.3e}",
        r.name, r.iters_checked, r.violations, r.max_residual
    )
}

fn logistic() -> Problem {
    ProblemSpec::logistic_default().instantiate(SEED).unwrap()
}

fn affgd(schedule: GammaSchedule) -> ControllerSpec {
    ControllerSpec::Affgd { schedule, alpha_init: 1e-3, slack: None }
}

fn full_run(problem: &Problem, controller: ControllerSpec, iters: usize) -> Trajectory {
    let cfg = RunConfig::new(problem.spec.clone(), controller).with_iters(iters).with_grad_tol(0.0);
    run_on(problem, &cfg).unwrap()
}

#[test]
fn criterion_1_lemma1_suite() {
    let p = logistic();
    let opt = p.optimum.clone().unwrap();
    let start = Instant::now();
    let t = full_run(&p, affgd(GammaSchedule::constant(0.7).unwrap()), 1000);
    let reports = [
        check_descent_lemma(&t, p.objective.as_ref(), opt.f, TOL).unwrap(),
        check_halfrange_vs(&t, &opt.point(), opt.f, TOL).unwrap(),
    ];
    let elapsed = start.elapsed();
    let ok = t.iterations() == 1000 && reports.iter().all(|r| r.violations == 0) && elapsed < LEMMA1_BUDGET;
    let detail: Vec<_> = reports.iter().map(summary).collect();
    report(1, "lemma1_suite", ok, format!("{} | {:.2?}", detail.join("; "), elapsed));
    assert!(ok);
}

#[test]
fn criterion_2_thm2_suite() {
    let p = logistic();
    let opt = p.optimum.clone().unwrap();
    let start = Instant::now();
    let t = full_run(&p, affgd(GammaSchedule::constant(0.7).unwrap()), 1000);
    let va = check_va_decrease(&t, &opt.point(), opt.f, TOL).unwrap();
    let rate = check_rate_bound(&t, &opt.point(), opt.f, TOL).unwrap();
    let sep = check_stepsize_separation(&t, SEPARATION_FACTOR).unwrap();
    let elapsed = start.elapsed();
    let certs_ok = va.violations == 0 && rate.violations == 0;
    let ok = certs_ok && sep.violations == 0 && elapsed < THM2_BUDGET;
    report(
        2,
        "thm2_suite",
        ok,
        format!(
            "{}; {}; separation min_alpha={:.4e} vs {} | {:.2?}",
            summary(&va),
            summary(&rate),
            sep.entries.first().map_or(f64::NAN, |e| e.rhs),
            sep.notes.join(" "),
            elapsed
        ),
    );
    assert!(certs_ok, "Va decrease or rate bound violated");
    assert!(sep.violations == 0, "stepsize separation: {:?}", sep.notes);
    assert!(elapsed < THM2_BUDGET);
}

#[test]
fn criterion_3_thm1_suite() {
    let p = ProblemSpec::diagonal_quadratic(&[1.0, 4.0], &[-1.0, -1.0]).instantiate(SEED).unwrap();
    let opt = p.optimum.clone().unwrap();
    let l_s = p.objective.smoothness_constant().unwrap();
    let start = Instant::now();
    let t = full_run(&p, ControllerSpec::Random { lo: 0.05, hi: 1.95 }, 10_000);
    let reports = [
        check_vs_decrease(&t, p.objective.as_ref(), &opt.point(), l_s, TOL).unwrap(),
        check_grad_monotonicity(&t, p.objective.as_ref(), l_s, TOL).unwrap(),
        check_theorem1_rates(&t, l_s, opt.f, TOL).unwrap(),
    ];
    let elapsed = start.elapsed();
    let ok = t.iterations() == 10_000 && reports.iter().all(|r| r.violations == 0) && elapsed < THM1_BUDGET;
    let detail: Vec<_> = reports.iter().map(summary).collect();
    report(3, "thm1_suite", ok, format!("{} | {:.2?}", detail.join("; "), elapsed));
    assert!(ok);
}

#[test]
fn criterion_4_lemma4_suite() {
    let p = logistic();
    let opt = p.optimum.clone().unwrap();
    let ctrl = ControllerSpec::GrowthCapped { gamma: 0.8, slack: 0.4, alpha_init: 1e-3 };
    let t = full_run(&p, ctrl, 500);
    let cap = check_affgd_constraints(&t, p.objective.as_ref()).unwrap();
    let vp = check_vp_decrease(&t, &opt.point(), opt.f, TOL).unwrap();
    let ok = t.iterations() == 500 && cap.violations == 0 && vp.violations == 0 && vp.iters_checked > 0;
    report(4, "lemma4_suite", ok, format!("{}; {}", summary(&cap), summary(&vp)));
    assert!(ok);
}

#[test]
fn criterion_5_robustness() {
    let deltas = [0.0, 0.5, 1.0, 1.2];
    let mut configs = Vec::new();
    for ctrl in [
        affgd(GammaSchedule::constant(ROBUST_GAMMA).unwrap()),
        ControllerSpec::Bls { gamma: ROBUST_GAMMA, cap: DEFAULT_BLS_CAP },
    ] {
        for d in deltas {
            configs.push(
                RunConfig::new(ProblemSpec::logistic_default(), ctrl.clone())
                    .with_iters(10_000)
                    .with_delta(d),
            );
        }
    }
    let runs = compare_runs(&configs).unwrap();
    let gap = |t: &Trajectory| t.final_gap().unwrap_or(f64::INFINITY);
    let converged = |t: &Trajectory| t.status != RunStatus::Diverged && gap(t) <= ROBUST_CONVERGED_GAP;
    let failed = |t: &Trajectory| t.status == RunStatus::Diverged || gap(t) > ROBUST_FAILED_GAP;
    let (aff, bls) = runs.split_at(4);
    let ok = aff.iter().all(converged) && bls[..3].iter().all(converged) && failed(&bls[3]);
    let detail: Vec<_> = runs
        .iter()
        .map(|t| format!("{}@{}={:.2e}", t.label, t.delta(), gap(t)))
        .collect();
    report(5, "robustness", ok, detail.join(" "));
    assert!(ok);
}

fn iters_to(t: &Trajectory) -> usize {
    t.first_k_below(FAST_GAP).unwrap_or(usize::MAX)
}

#[test]
fn criterion_6_adaptation() {
    let configs: Vec<_> = [
        GammaSchedule::adaptive(0.95, 0.9).unwrap(),
        GammaSchedule::constant(0.7).unwrap(),
        GammaSchedule::constant(0.2).unwrap(),
        GammaSchedule::constant(0.95).unwrap(),
    ]
    .into_iter()
    .map(|s| RunConfig::new(ProblemSpec::logistic_default(), affgd(s)).with_iters(2000))
    .collect();
    let runs = compare_runs(&configs).unwrap();
    let k: Vec<usize> = runs.iter().map(iters_to).collect();
    let ok = k[0] != usize::MAX
        && (k[0] as f64) <= ADAPTIVE_SLOWDOWN * k[1] as f64
        && k[0] < k[2]
        && k[0] < k[3];
    report(
        6,
        "adaptation",
        ok,
        format!("iters to 1e-8: adaptive={} g0.7={} g0.2={} g0.95={}", k[0], k[1], k[2], k[3]),
    );
    assert!(ok);
}

#[test]
fn criterion_7_acceleration() {
    let configs: Vec<_> = [
        affgd(GammaSchedule::constant(0.7).unwrap()),
        ControllerSpec::Constant { scale: 1.0 },
        ControllerSpec::OpenLoop { horizon_scale: DEFAULT_HORIZON_SCALE, scale: 1.0 },
    ]
    .into_iter()
    .map(|c| RunConfig::new(ProblemSpec::logistic_default(), c).with_iters(2000))
    .collect();
    let runs = compare_runs(&configs).unwrap();
    let k: Vec<usize> = runs.iter().map(iters_to).collect();
    let faster = k[0] < k[1] && k[0] < k[2];

    let aff = &runs[0];
    let window = k[0].min(aff.iterations());
    let cum = |i: usize| aff.records[i].cum_alpha;
    let best_ratio = (1..=window / 2)
        .filter(|&i| cum(i) > 0.0)
        .map(|i| cum(2 * i) / cum(i))
        .fold(0.0, f64::max);
    let superlinear = best_ratio > 2.0;
    let ok = faster && superlinear;
    report(
        7,
        "acceleration",
        ok,
        format!(
            "iters to 1e-8: affgd={} gd={} tv={}; max sum-alpha(2k)/sum-alpha(k)={best_ratio:.3}",
            k[0], k[1], k[2]
        ),
    );
    assert!(superlinear, "cumulative stepsize is not super-linear");
    assert!(faster, "affgd={} gd={} tv={}", k[0], k[1], k[2]);
}

fn oracle_objectives() -> Vec<(&'static str, Problem)> {
    vec![
        ("logistic", logistic()),
        (
            "quadratic",
            ProblemSpec::diagonal_quadratic(&[1.0, 4.0], &[-1.0, -1.0]).instantiate(SEED).unwrap(),
        ),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vector {
    Vector::from_fn(dim, |_, _| rng.random_range(-radius..radius))
}

#[test]
fn criterion_8_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = true;
    let mut details = Vec::new();
    for (name, p) in oracle_objectives() {
        let obj = p.objective.as_ref();
        let dim = obj.dim();

        let mut worst_fd = 0.0_f64;
        for _ in 0..1000 {
            let x = random_point(&mut rng, dim, 5.0);
            let g = obj.gradient(&x);
            let fd = finite_diff_gradient(obj, &x, FD_STEP).unwrap();
            let err = (&g - &fd).norm() / g.norm().max(1e-8);
            worst_fd = worst_fd.max(err);
        }

        let opts = LinesearchOptions::default();
        let mut worst_ls = 0.0_f64;
        for _ in 0..100 {
            let x = random_point(&mut rng, dim, 5.0);
            let g = obj.gradient(&x);
            let gamma = rng.random_range(0.1..0.99);
            let cap = rng.random_range(0.5..50.0);
            let accepted = solve_alpha1(obj, &x, &g, gamma, cap, &opts).unwrap().accepted_alpha;
            let grid = grid_search_alpha1(obj, &x, gamma, cap, GRID_POINTS).unwrap().unwrap();
            worst_ls = worst_ls.max((accepted / grid).ln().abs());
        }
        let shrink_log = (1.0 / DEFAULT_SHRINK).ln();

        let l_s = obj.smoothness_constant().unwrap();
        let center = Vector::zeros(dim);
        let coco = check_cocoercivity(obj, l_s, 1000, &center, 5.0, SEED, Tolerance::absolute(COCOERCIVITY_TOL)).unwrap();

        let this_ok = worst_fd < FD_REL_ERR && worst_ls <= shrink_log && coco.violations == 0;
        ok &= this_ok;
        details.push(format!(
            "{name}: fd_rel_err={worst_fd:.2e} linesearch_log_ratio={worst_ls:.3}/{shrink_log:.3} cocoercivity_violations={}",
            coco.violations
        ));
    }
    report(8, "oracles", ok, details.join("; "));
    assert!(ok);
}

fn affgd_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_affgd")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn criterion_9_negative_path() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("traj.json");
    let bad = dir.path().join("corrupt.json");
    let csv = dir.path().join("traj.csv");
    let run = affgd_bin(&["run", "--iters", "200", "--out", path_str(&csv), "--json", path_str(&json)]);
    assert_eq!(run.status.code(), Some(0));

    let clean = affgd_bin(&["verify", "--suite", "thm2", "--trajectory", path_str(&json)]);

    let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let mut doubled = 0;
    for rec in value["records"].as_array_mut().unwrap() {
        if let Some(a) = rec["step"]["alpha"].as_f64() {
            rec["step"]["alpha"] = serde_json::json!(2.0 * a);
            doubled += 1;
        }
    }
    std::fs::write(&bad, serde_json::to_string(&value).unwrap()).unwrap();
    let corrupt = affgd_bin(&["verify", "--suite", "thm2", "--trajectory", path_str(&bad)]);

    let ok = doubled > 0 && clean.status.code() == Some(0) && corrupt.status.code() == Some(3);
    report(
        9,
        "negative_path",
        ok,
        format!(
            "clean exit={:?}, corrupted ({doubled} steps doubled) exit={:?}",
            clean.status.code(),
            corrupt.status.code()
        ),
    );
    assert!(ok, "{}", String::from_utf8_lossy(&corrupt.stderr));
}

#[test]
fn replay_oracle_accepts_engine_output() {
    // sanity: the recorded trajectory is a faithful GD recursion
    let p = logistic();
    let t = full_run(&p, affgd(GammaSchedule::constant(0.7).unwrap()), 100);
    assert_eq!(check_recursion_replay(&t, p.objective.as_ref(), TOL).unwrap().violations, 0);
}
