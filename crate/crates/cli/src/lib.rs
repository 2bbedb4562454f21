//! Command-line front end: single runs, figure-style comparisons and
//! certificate checks.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use affgd_core::certify::{run_suite, CertReport, Suite, Tolerance, Verdict};
use affgd_core::controllers::{ControllerSpec, GammaSchedule, DEFAULT_BLS_CAP, DEFAULT_HORIZON_SCALE};
use affgd_core::engine::{
    compare_runs, run_gd, PerturbationSpec, Problem, ProblemSpec, RunConfig, RunStatus, Trajectory,
};
use affgd_core::io::{
    load_trajectory_json, save_csv, save_trajectory_json, write_dataset_csv, write_reports_csv,
    write_trajectory_csv,
};
use affgd_core::problems::{make_logistic_dataset, DEFAULT_FLIP_FRACTION};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;
/// I/O failures and aborted runs.
pub const EXIT_RUNTIME: i32 = 4;

/// Gap level used to compare convergence speed across runs.
pub const CONVERGED_GAP: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "affgd", version, about = "Adaptive feedback-feedforward gradient descent experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one configuration and write its trajectory CSV.
    #[command(args_override_self = true)]
    Run(RunArgs),
    /// Run a group of controllers on one shared problem.
    #[command(args_override_self = true)]
    Compare(CompareArgs),
    /// Generate (or load) trajectories and check the convergence certificates.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Write the seeded logistic dataset as CSV.
    #[command(args_override_self = true)]
    Dataset(DatasetArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Logistic,
    Quadratic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ControllerKind {
    Gd,
    Tv,
    Affgd,
    Bls,
    Adgd,
    Adagm,
    /// Inexact first bound with the growth cap `α_k ≤ (a/γ)α_{k-1}`.
    Capped,
    /// Uniform random steps in `[step-lo, step-hi)/L_s`.
    Random,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GammaModeArg {
    Constant,
    Adaptive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CompareSuite {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifySuite {
    Lemma1,
    Thm1,
    Thm2,
    Lemma4,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "logistic")]
    pub problem: ProblemKind,
    #[arg(long, env = "AFFGD_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 2)]
    pub n_features: usize,
    #[arg(long, default_value_t = DEFAULT_FLIP_FRACTION)]
    pub flip: f64,
    /// Diagonal of `M` for the quadratic problem, comma separated.
    #[arg(long, default_value = "1,1")]
    pub quad_diag: String,
    /// Linear term `b`; defaults to all −1.
    #[arg(long, allow_hyphen_values = true)]
    pub quad_b: Option<String>,
    /// Starting point, comma separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ControllerArgs {
    #[arg(long, value_enum)]
    pub controller: Option<ControllerKind>,
    #[arg(long, default_value_t = 0.7)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "constant")]
    pub gamma_mode: GammaModeArg,
    #[arg(long, default_value_t = 0.9)]
    pub theta: f64,
    /// `α_{-1}` for AFFGD and the capped law, first step for AdGD/AdaGM.
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_init: f64,
    /// Multiplier of `1/L_s` for gd and tv.
    #[arg(long, default_value_t = 1.0)]
    pub step_scale: f64,
    /// Slack `a` of an inexact first bound (affgd: `a ∈ (γ,1)`, capped: `a ∈ (0,γ]`).
    #[arg(long)]
    pub slack: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_HORIZON_SCALE)]
    pub horizon: f64,
    #[arg(long, default_value_t = DEFAULT_BLS_CAP)]
    pub bls_cap: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step_lo: f64,
    #[arg(long, default_value_t = 1.95)]
    pub step_hi: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Trajectory CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also save the full trajectory as JSON (input for `verify --trajectory`).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// `key = value` file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CompareArgs {
    #[arg(long, value_enum)]
    pub suite: CompareSuite,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_init: f64,
    /// γ shared by AFFGD and BLS in the perturbation suite.
    #[arg(long, default_value_t = 0.99)]
    pub robust_gamma: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifySuiteArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: VerifySuite,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: VerifySuite,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub grad_tol: f64,
    /// Verify a saved trajectory instead of generating one.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Certificate report CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_rel: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self { code: EXIT_RUNTIME, message: message.into() }
    }
}

impl From<affgd_core::Error> for CliError {
    fn from(e: affgd_core::Error) -> Self {
        use affgd_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::InvalidUsage(_) => Self::usage(e.to_string()),
            other => Self::runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::usage(format!("config line {}: invalid key '{}'", n + 1, k.trim())));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts config-file entries right after the subcommand so that later
/// command-line occurrences override them.
fn expand_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse_config(&text)?;
    let mut out: Vec<OsString> = args.iter().take(2).cloned().collect();
    for (k, v) in entries {
        out.push(format!("--{k}").into());
        out.push(v.into());
    }
    out.extend(args.into_iter().skip(2));
    Ok(out)
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::usage(format!("--{what}: bad number '{t}': {e}")))
        })
        .collect()
}

impl ProblemArgs {
    pub fn spec(&self) -> CliResult<ProblemSpec> {
        Ok(match self.problem {
            ProblemKind::Logistic => ProblemSpec::Logistic {
                n_samples: self.n_samples,
                n_features: self.n_features,
                flip_fraction: self.flip,
            },
            ProblemKind::Quadratic => {
                let diag = parse_list(&self.quad_diag, "quad-diag")?;
                let b = match &self.quad_b {
                    Some(s) => parse_list(s, "quad-b")?,
                    None => vec![-1.0; diag.len()],
                };
                if b.len() != diag.len() {
                    return Err(CliError::usage("--quad-b and --quad-diag lengths differ"));
                }
                ProblemSpec::diagonal_quadratic(&diag, &b)
            }
        })
    }

    pub fn x0(&self) -> CliResult<Option<Vec<f64>>> {
        self.x0.as_deref().map(|s| parse_list(s, "x0")).transpose()
    }
}

impl ControllerArgs {
    pub fn spec(&self, default: ControllerKind) -> CliResult<ControllerSpec> {
        let schedule = || -> CliResult<GammaSchedule> {
            Ok(match self.gamma_mode {
                GammaModeArg::Constant => GammaSchedule::constant(self.gamma)?,
                GammaModeArg::Adaptive => GammaSchedule::adaptive(self.gamma, self.theta)?,
            })
        };
        Ok(match self.controller.unwrap_or(default) {
            ControllerKind::Gd => ControllerSpec::Constant { scale: self.step_scale },
            ControllerKind::Tv => ControllerSpec::OpenLoop {
                horizon_scale: self.horizon,
                scale: self.step_scale,
            },
            ControllerKind::Affgd => ControllerSpec::Affgd {
                schedule: schedule()?,
                alpha_init: self.alpha_init,
                slack: self.slack,
            },
            ControllerKind::Bls => ControllerSpec::Bls { gamma: self.gamma, cap: self.bls_cap },
            ControllerKind::Adgd => ControllerSpec::Adgd { alpha_init: self.alpha_init },
            ControllerKind::Adagm => ControllerSpec::Adagm { alpha_init: self.alpha_init },
            ControllerKind::Capped => ControllerSpec::GrowthCapped {
                gamma: self.gamma,
                slack: self.slack.unwrap_or(self.gamma / 2.0),
                alpha_init: self.alpha_init,
            },
            ControllerKind::Random => ControllerSpec::Random { lo: self.step_lo, hi: self.step_hi },
        })
    }
}

fn status_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::GradTolReached | RunStatus::BudgetExhausted => EXIT_OK,
        RunStatus::Diverged => EXIT_DIVERGED,
        RunStatus::Aborted => EXIT_RUNTIME,
    }
}

fn fmt_gap(g: Option<f64>) -> String {
    g.map_or_else(|| "nan".to_string(), |g| format!("{g:e}"))
}

/// `final_gap=<g> iters=<k> status=<s>`.
pub fn summary_line(t: &Trajectory) -> String {
    format!("final_gap={} iters={} status={}", fmt_gap(t.final_gap()), t.iterations(), t.status.as_str())
}

fn write_traj(t: &Trajectory, path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_csv(path, |w| write_trajectory_csv(t, w))?;
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> CliResult<i32> {
    let config = RunConfig {
        problem: args.problem.spec()?,
        controller: args.controller.spec(ControllerKind::Affgd)?,
        max_iters: args.iters,
        grad_tol: args.grad_tol,
        seed: args.problem.seed,
        perturbation: PerturbationSpec { delta: args.delta },
        record_every: args.record_every,
        x0: args.problem.x0()?,
        record_iterates: None,
    };
    let start = Instant::now();
    let traj = run_gd(&config)?;
    let elapsed = start.elapsed();
    match &args.out {
        Some(path) => {
            write_traj(&traj, path)?;
            println!("{}", summary_line(&traj));
        }
        None => {
            write_trajectory_csv(&traj, io::stdout().lock())?;
            eprintln!("{}", summary_line(&traj));
        }
    }
    if let Some(path) = &args.json {
        save_trajectory_json(&traj, path)?;
    }
    eprintln!("elapsed={:.3}s", elapsed.as_secs_f64());
    if let Some(e) = &traj.error {
        eprintln!("run aborted: {e}");
    }
    Ok(status_code(traj.status))
}

/// Configurations of a comparison suite, labelled.
pub fn compare_configs(args: &CompareArgs) -> CliResult<Vec<(String, RunConfig)>> {
    let problem = args.problem.spec()?;
    let x0 = args.problem.x0()?;
    let base = |controller: ControllerSpec, iters: usize| RunConfig {
        x0: x0.clone(),
        ..RunConfig::new(problem.clone(), controller)
            .with_iters(args.iters.unwrap_or(iters))
            .with_grad_tol(args.grad_tol)
            .with_seed(args.problem.seed)
    };
    let affgd = |schedule: GammaSchedule| ControllerSpec::Affgd {
        schedule,
        alpha_init: args.alpha_init,
        slack: None,
    };
    let mut out = Vec::new();
    match args.suite {
        CompareSuite::Fig2 => {
            for c in [
                ControllerSpec::Constant { scale: 1.0 },
                ControllerSpec::OpenLoop { horizon_scale: DEFAULT_HORIZON_SCALE, scale: 1.0 },
                ControllerSpec::Adgd { alpha_init: args.alpha_init },
                ControllerSpec::Adagm { alpha_init: args.alpha_init },
                affgd(GammaSchedule::constant(0.7)?),
            ] {
                out.push((c.label(), base(c, 2000)));
            }
        }
        CompareSuite::Fig3 => {
            for s in [
                GammaSchedule::constant(0.2)?,
                GammaSchedule::constant(0.7)?,
                GammaSchedule::constant(0.95)?,
                GammaSchedule::adaptive(0.95, 0.9)?,
            ] {
                let c = affgd(s);
                out.push((c.label(), base(c, 2000)));
            }
        }
        CompareSuite::Fig4 => {
            let g = args.robust_gamma;
            for c in [affgd(GammaSchedule::constant(g)?), ControllerSpec::Bls { gamma: g, cap: DEFAULT_BLS_CAP }] {
                for delta in [0.0, 0.5, 1.0, 1.2] {
                    out.push((format!("{}_d{delta}", c.label()), base(c.clone(), 10_000).with_delta(delta)));
                }
            }
        }
    }
    Ok(out)
}

/// Wide CSV `k,<label>...` of optimality gaps; blank once a run has stopped.
pub fn write_gap_table<W: Write>(labels: &[String], runs: &[Trajectory], out: W) -> io::Result<()> {
    let mut w = io::BufWriter::new(out);
    writeln!(w, "k,{}", labels.join(","))?;
    let maps: Vec<BTreeMap<usize, Option<f64>>> = runs
        .iter()
        .map(|t| t.records.iter().map(|r| (r.k, r.gap)).collect())
        .collect();
    let last = runs.iter().map(|t| t.iterations()).max().unwrap_or(0);
    for k in 0..=last {
        let cells: Vec<String> = maps
            .iter()
            .map(|m| match m.get(&k) {
                Some(Some(g)) => format!("{g:?}"),
                _ => String::new(),
            })
            .collect();
        if cells.iter().all(String::is_empty) {
            continue;
        }
        writeln!(w, "{k},{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn suite_name(s: CompareSuite) -> &'static str {
    match s {
        CompareSuite::Fig2 => "fig2",
        CompareSuite::Fig3 => "fig3",
        CompareSuite::Fig4 => "fig4",
    }
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<i32> {
    let labelled = compare_configs(args)?;
    let (labels, configs): (Vec<String>, Vec<RunConfig>) = labelled.into_iter().unzip();
    let start = Instant::now();
    let runs = compare_runs(&configs)?;
    let elapsed = start.elapsed();
    fs::create_dir_all(&args.out_dir)?;
    let name = suite_name(args.suite);
    println!("{:<28} {:>17} {:>8} {:>12} {:>8}", "run", "status", "iters", "final_gap", "k@1e-8");
    for (label, t) in labels.iter().zip(&runs) {
        write_traj(t, &args.out_dir.join(format!("{name}_{label}.csv")))?;
        let k = t.first_k_below(CONVERGED_GAP).map_or("-".to_string(), |k| k.to_string());
        println!(
            "{:<28} {:>17} {:>8} {:>12} {:>8}",
            label,
            t.status.as_str(),
            t.iterations(),
            fmt_gap(t.final_gap()),
            k
        );
    }
    save_csv(&args.out_dir.join(format!("{name}_gaps.csv")), |w| {
        Ok(write_gap_table(&labels, &runs, w)?)
    })?;
    eprintln!("elapsed={:.3}s", elapsed.as_secs_f64());
    Ok(EXIT_OK)
}

fn verify_suites(s: VerifySuite) -> Vec<Suite> {
    match s {
        VerifySuite::Lemma1 => vec![Suite::Lemma1],
        VerifySuite::Thm1 => vec![Suite::Thm1],
        VerifySuite::Thm2 => vec![Suite::Thm2],
        VerifySuite::Lemma4 => vec![Suite::Lemma4],
        VerifySuite::All => Suite::ALL.to_vec(),
    }
}

/// Controller whose trajectories a suite is stated for.
fn natural_controller(s: Suite) -> ControllerKind {
    match s {
        Suite::Lemma1 | Suite::Thm2 => ControllerKind::Affgd,
        Suite::Thm1 => ControllerKind::Random,
        Suite::Lemma4 => ControllerKind::Capped,
    }
}

fn lemma4_defaults(args: &ControllerArgs) -> ControllerArgs {
    // γ = 0.8, a = 0.4 unless given explicitly
    let mut c = args.clone();
    if c.controller.is_none() {
        if c.slack.is_none() && c.gamma == 0.7 {
            c.gamma = 0.8;
        }
        c.slack = Some(c.slack.unwrap_or(c.gamma / 2.0));
    }
    c
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<i32> {
    let tol = Tolerance { abs: args.tol_abs, rel: args.tol_rel };
    let mut rows: Vec<(Suite, CertReport)> = Vec::new();
    let mut problem_cache: Option<Problem> = None;
    for suite in verify_suites(args.suite) {
        let traj = match &args.trajectory {
            Some(path) => load_trajectory_json(path)?,
            None => {
                let ctrl = if suite == Suite::Lemma4 { lemma4_defaults(&args.controller) } else { args.controller.clone() };
                let config = RunConfig {
                    x0: args.problem.x0()?,
                    ..RunConfig::new(args.problem.spec()?, ctrl.spec(natural_controller(suite))?)
                        .with_iters(args.iters)
                        .with_grad_tol(args.grad_tol)
                        .with_seed(args.problem.seed)
                };
                run_gd(&config)?
            }
        };
        let cached = problem_cache
            .as_ref()
            .filter(|p| p.spec == traj.config.problem && p.seed == traj.config.seed)
            .cloned();
        let problem = match cached {
            Some(p) => p,
            None => traj.config.problem.instantiate(traj.config.seed)?,
        };
        let optimum = problem
            .optimum
            .clone()
            .ok_or_else(|| CliError::usage("the problem has no attained minimum to certify against"))?;
        for r in run_suite(suite, &traj, problem.objective.as_ref(), &optimum, tol)? {
            rows.push((suite, r));
        }
        problem_cache = Some(problem);
    }
    println!(
        "{:<8} {:<28} {:>8} {:>8} {:>13} {:>11}  verdict",
        "suite", "inequality", "checked", "skipped", "max_residual", "tolerance"
    );
    for (s, r) in &rows {
        println!(
            "{:<8} {:<28} {:>8} {:>8} {:>13.4e} {:>11.3e}  {}",
            s.as_str(),
            r.name,
            r.iters_checked,
            r.iters_skipped,
            r.max_residual,
            r.tolerance,
            r.verdict.as_str()
        );
    }
    if let Some(path) = &args.out {
        let reports: Vec<CertReport> = rows.iter().map(|(_, r)| r.clone()).collect();
        save_csv(path, |w| write_reports_csv(&reports, w))?;
    }
    let failing: Vec<_> = rows.iter().filter(|(_, r)| r.verdict != Verdict::Pass).collect();
    if failing.is_empty() {
        return Ok(EXIT_OK);
    }
    let worst = failing
        .iter()
        .max_by(|a, b| (a.1.max_residual - a.1.tolerance).total_cmp(&(b.1.max_residual - b.1.tolerance)))
        .expect("nonempty");
    eprintln!(
        "verification failed: {} ({}) {} at k={} residual={:e} tolerance={:e}",
        worst.1.name,
        worst.0.as_str(),
        worst.1.verdict.as_str(),
        worst.1.worst_iteration.map_or("-".to_string(), |k| k.to_string()),
        worst.1.max_residual,
        worst.1.tolerance
    );
    Ok(EXIT_VERIFY_FAILED)
}

pub fn cmd_dataset(args: &DatasetArgs) -> CliResult<i32> {
    let p = &args.problem;
    let data = make_logistic_dataset(p.n_samples, p.n_features, p.seed, p.flip)?;
    match &args.out {
        Some(path) => save_csv(path, |w| write_dataset_csv(&data, w))?,
        None => write_dataset_csv(&data, io::stdout().lock())?,
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Dataset(a) => cmd_dataset(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
