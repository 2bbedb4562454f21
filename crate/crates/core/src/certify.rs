//! Replay checks of descent inequalities, Lyapunov decrease conditions and
//! rate bounds along recorded trajectories.
//!
//! Every checker is a pure function of its inputs. A check compares a left
//! side against a right side at each qualifying iteration; the residual is
//! `lhs − rhs` and it passes when the residual stays below the tolerance
//! allowance for that iteration.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::controllers::{alpha2_bound, ControllerSpec};
use crate::engine::{IterRecord, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{local_l, CurvatureProbe};
use crate::problems::{Objective, Optimum};
use crate::{Vector, DEGENERATE_NORM};

/// Margin kept from the ends of the classical range `L_s·α ∈ (0, 2)`.
pub const SMOOTH_RANGE_MARGIN: f64 = 1e-3;
/// Multiple of the running median a rate product may reach.
pub const RATE_MEDIAN_FACTOR: f64 = 10.0;
/// Slack of the feasibility replay of the AFFGD law.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

/// Allowance `abs + rel·max(|lhs|, |rhs|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-9 }
    }
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn allowance(&self, lhs: f64, rhs: f64) -> f64 {
        self.abs + self.rel * lhs.abs().max(rhs.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The inequality's preconditions did not hold, so nothing was concluded.
    HypothesesViolated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::HypothesesViolated => "hypotheses_violated",
        }
    }
}

/// One evaluated inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub allowance: f64,
}

impl CheckEntry {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn violated(&self) -> bool {
        // NaN residuals count as violations
        !(self.residual() <= self.allowance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub name: String,
    pub iters_checked: usize,
    pub iters_skipped: usize,
    /// Residual at the iteration closest to (or furthest past) its allowance.
    pub max_residual: f64,
    /// Allowance at that same iteration.
    pub tolerance: f64,
    pub worst_iteration: Option<usize>,
    pub violations: usize,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub entries: Vec<CheckEntry>,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

struct Checker {
    name: String,
    tol: Tolerance,
    entries: Vec<CheckEntry>,
    skipped: usize,
    hypotheses: Vec<String>,
    notes: Vec<String>,
}

impl Checker {
    fn new(name: &str, tol: Tolerance) -> Self {
        Self {
            name: name.to_string(),
            tol,
            entries: Vec::new(),
            skipped: 0,
            hypotheses: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, k: usize, lhs: f64, rhs: f64) {
        let allowance = self.tol.allowance(lhs, rhs);
        self.entries.push(CheckEntry { k, lhs, rhs, allowance });
    }

    fn skip(&mut self) {
        self.skipped += 1;
    }

    fn hypothesis_failed(&mut self, msg: String) {
        if self.hypotheses.len() < 5 {
            self.hypotheses.push(msg);
        }
    }

    fn finish(self) -> CertReport {
        let worst = self
            .entries
            .iter()
            .max_by(|a, b| {
                let ea = excess(a);
                let eb = excess(b);
                ea.total_cmp(&eb)
            })
            .copied();
        let violations = self.entries.iter().filter(|e| e.violated()).count();
        let verdict = if !self.hypotheses.is_empty() {
            Verdict::HypothesesViolated
        } else if violations > 0 {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        let mut notes = self.notes;
        notes.extend(self.hypotheses);
        CertReport {
            name: self.name,
            iters_checked: self.entries.len(),
            iters_skipped: self.skipped,
            max_residual: worst.map_or(0.0, |e| e.residual()),
            tolerance: worst.map_or(self.tol.abs, |e| e.allowance),
            worst_iteration: worst.map(|e| e.k),
            violations,
            verdict,
            notes,
            entries: self.entries,
        }
    }
}

fn excess(e: &CheckEntry) -> f64 {
    let r = e.residual() - e.allowance;
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

fn point(r: &IterRecord) -> Result<Vector> {
    r.point()
        .ok_or_else(|| Error::InvalidUsage(format!("iterate {} was not recorded", r.k)))
}

fn require_dense(traj: &Trajectory, what: &str) -> Result<()> {
    if traj.is_dense() {
        Ok(())
    } else {
        Err(Error::InvalidUsage(format!("{what} needs every iterate (record_every = 1)")))
    }
}

fn gap(r: &IterRecord, f_star: f64) -> f64 {
    r.f - f_star
}

/// Applied step `(1+δ)α_k` of record `r`.
fn applied(traj: &Trajectory, r: &IterRecord) -> Option<f64> {
    r.alpha().map(|a| (1.0 + traj.delta()) * a)
}

/// Consecutive record pairs `(k, k+1)` with a step; other pairs are counted as skipped.
fn pairs<'a>(traj: &'a Trajectory, chk: &mut Checker) -> Vec<(&'a IterRecord, &'a IterRecord)> {
    let mut out = Vec::new();
    for w in traj.records.windows(2) {
        if w[1].k == w[0].k + 1 && w[0].step.is_some() {
            out.push((&w[0], &w[1]));
        } else {
            chk.skip();
        }
    }
    out
}

fn smooth_range_ok(l_s: f64, alpha: f64) -> bool {
    let t = l_s * alpha;
    (SMOOTH_RANGE_MARGIN..=2.0 - SMOOTH_RANGE_MARGIN).contains(&t)
}

fn check_l_s(l_s: f64) -> Result<()> {
    if l_s > 0.0 && l_s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("smoothness constant must be positive, got {l_s}")))
    }
}

/// `‖x_{k+1}−x*‖² − ‖x_k−x*‖² ≤ −(α/L_s)(2−αL_s)(1+αL_s)‖∇f(x_{k+1})‖²`
/// for globally `L_s`-smooth objectives and `L_sα ∈ (0, 2)`.
pub fn check_vs_decrease(
    traj: &Trajectory,
    obj: &dyn Objective,
    x_star: &Vector,
    l_s: f64,
    tol: Tolerance,
) -> Result<CertReport> {
    check_l_s(l_s)?;
    check_dim(obj.dim(), x_star.len())?;
    let mut chk = Checker::new("vs_decrease", tol);
    for (a, b) in pairs(traj, &mut chk) {
        let alpha = applied(traj, a).unwrap_or_default();
        if !smooth_range_ok(l_s, alpha) {
            chk.hypothesis_failed(format!("k={}: L_s·α = {} outside the admissible range", a.k, l_s * alpha));
            continue;
        }
        let (xa, xb) = (point(a)?, point(b)?);
        let lhs = (&xb - x_star).norm_squared() - (&xa - x_star).norm_squared();
        let gb = obj.gradient(&xb).norm_squared();
        let rhs = -(alpha / l_s) * (2.0 - alpha * l_s) * (1.0 + alpha * l_s) * gb;
        chk.check(a.k, lhs, rhs);
    }
    Ok(chk.finish())
}

/// `‖∇f(x_{k+1})‖ ≤ ‖∇f(x_k)‖` when `L_sα ∈ (0, 2)`.
pub fn check_grad_monotonicity(
    traj: &Trajectory,
    obj: &dyn Objective,
    l_s: f64,
    tol: Tolerance,
) -> Result<CertReport> {
    check_l_s(l_s)?;
    let mut chk = Checker::new("grad_monotonicity", tol);
    for (a, b) in pairs(traj, &mut chk) {
        let alpha = applied(traj, a).unwrap_or_default();
        if !smooth_range_ok(l_s, alpha) {
            chk.hypothesis_failed(format!("k={}: L_s·α = {} outside the admissible range", a.k, l_s * alpha));
            continue;
        }
        let ga = obj.gradient(&point(a)?).norm();
        let gb = obj.gradient(&point(b)?).norm();
        chk.check(a.k, gb, ga);
    }
    Ok(chk.finish())
}

/// `F_{k+1} ≤ F_k − (1 − L_kα_k)α_k‖∇f(x_k)‖²` with `L_k` recomputed from
/// the consecutive iterates. Pairs without displacement are skipped.
pub fn check_descent_lemma(
    traj: &Trajectory,
    obj: &dyn Objective,
    f_star: f64,
    tol: Tolerance,
) -> Result<CertReport> {
    let mut chk = Checker::new("descent_lemma", tol);
    let mut expansive = 0usize;
    for (a, b) in pairs(traj, &mut chk) {
        let (xa, xb) = (point(a)?, point(b)?);
        let l_k = match local_l(obj, &xa, &xb) {
            Ok(l) => l,
            Err(Error::DegenerateProbe(_)) => {
                chk.skip();
                continue;
            }
            Err(e) => return Err(e),
        };
        let alpha = applied(traj, a).unwrap_or_default();
        if l_k * alpha > 1.0 {
            expansive += 1;
        }
        let g2 = obj.gradient(&xa).norm_squared();
        let lhs = obj.value(&xb) - f_star;
        let rhs = obj.value(&xa) - f_star - (1.0 - l_k * alpha) * alpha * g2;
        chk.check(a.k, lhs, rhs);
    }
    if expansive > 0 {
        chk.notes.push(format!("{expansive} steps had L_k·α_k > 1 (negative decrease coefficient)"));
    }
    Ok(chk.finish())
}

/// `‖x_{k+1}−x*‖² − ‖x_k−x*‖² ≤ −2α_kF_{k+1}` on iterations with
/// `L_kα_k ∈ (0, 1/2)`, using the recorded local estimates.
pub fn check_halfrange_vs(traj: &Trajectory, x_star: &Vector, f_star: f64, tol: Tolerance) -> Result<CertReport> {
    let mut chk = Checker::new("halfrange_vs", tol);
    for (a, b) in pairs(traj, &mut chk) {
        let alpha = applied(traj, a).unwrap_or_default();
        let qualifies = a
            .step
            .and_then(|s| s.local_l)
            .is_some_and(|l| l * alpha > 0.0 && l * alpha < 0.5);
        if !qualifies {
            chk.skip();
            continue;
        }
        let (xa, xb) = (point(a)?, point(b)?);
        check_dim(x_star.len(), xa.len())?;
        let lhs = (&xb - x_star).norm_squared() - (&xa - x_star).norm_squared();
        let rhs = -2.0 * alpha * gap(b, f_star);
        chk.check(a.k, lhs, rhs);
    }
    Ok(chk.finish())
}

/// History of an AFFGD-type run: `α_{k-1}`, `γ_{k-1}` for every recorded step.
fn affgd_history(traj: &Trajectory) -> Result<(f64, f64)> {
    if traj.delta() != 0.0 {
        return Err(Error::InvalidUsage("the AFFGD certificates assume an unperturbed run".into()));
    }
    match (&traj.config.controller, traj.initial_state) {
        (ControllerSpec::Affgd { .. }, Some(init)) => Ok(init),
        _ => Err(Error::InvalidUsage(format!("trajectory '{}' was not produced by AFFGD", traj.label))),
    }
}

fn step_field(r: &IterRecord, f: impl Fn(&crate::engine::StepRecord) -> Option<f64>, what: &str) -> Result<f64> {
    r.step
        .as_ref()
        .and_then(f)
        .ok_or_else(|| Error::InvalidUsage(format!("step {} has no recorded {what}", r.k)))
}

/// `V^a_k = ‖x_k−x*‖² + 2α_{k-1}/(1−γ_{k-1}²)·F_k`.
pub fn va_value(x: &Vector, x_star: &Vector, f_gap: f64, alpha_prev: f64, gamma_prev: f64) -> f64 {
    (x - x_star).norm_squared() + 2.0 * alpha_prev / (1.0 - gamma_prev * gamma_prev) * f_gap
}

/// Decrease of `V^a` along an AFFGD run:
/// `V^a_{k+1} − V^a_k ≤ −(2γ_k²/(1−γ_k²))(α^(2)_k − α_k)F_k − (α_k²/(1−γ_k²))‖∇f(x_{k+1})‖²`.
///
/// The full condition also subtracts `α_k/L_D·‖∇f(x_k)‖²` for a set-dependent
/// constant `L_D` that cannot be evaluated; dropping that nonnegative term
/// gives a weaker inequality, so a failure here is a genuine failure.
pub fn check_va_decrease(traj: &Trajectory, x_star: &Vector, f_star: f64, tol: Tolerance) -> Result<CertReport> {
    let (mut alpha_prev, mut gamma_prev) = affgd_history(traj)?;
    require_dense(traj, "the V^a check")?;
    let mut chk = Checker::new("va_decrease", tol);
    for (a, b) in pairs(traj, &mut chk) {
        let alpha = step_field(a, |s| Some(s.alpha), "alpha")?;
        let gamma = step_field(a, |s| s.gamma, "gamma")?;
        let alpha2 = step_field(a, |s| s.alpha2, "alpha2")?;
        let (xa, xb) = (point(a)?, point(b)?);
        let (fa, fb) = (gap(a, f_star), gap(b, f_star));
        let v_a = va_value(&xa, x_star, fa, alpha_prev, gamma_prev);
        let v_b = va_value(&xb, x_star, fb, alpha, gamma);
        let one_m = 1.0 - gamma * gamma;
        let rhs = -(2.0 * gamma * gamma / one_m) * (alpha2 - alpha) * fa - alpha * alpha / one_m * b.grad_norm.powi(2);
        chk.check(a.k, v_b - v_a, rhs);
        alpha_prev = alpha;
        gamma_prev = gamma;
    }
    Ok(chk.finish())
}

/// Last-iterate bound
/// `F_k ≤ (‖x_0−x*‖² + 2α_0γ_0²/(1−γ_0²)·F_0) / (2Σ_{i=1}^{k-1}α_i)` for `k ≥ 2`.
pub fn check_rate_bound(traj: &Trajectory, x_star: &Vector, f_star: f64, tol: Tolerance) -> Result<CertReport> {
    affgd_history(traj)?;
    require_dense(traj, "the rate bound")?;
    let mut chk = Checker::new("rate_bound", tol);
    let first = &traj.records[0];
    if first.step.is_none() {
        return Ok(chk.finish());
    }
    let alpha0 = step_field(first, |s| Some(s.alpha), "alpha")?;
    let gamma0 = step_field(first, |s| s.gamma, "gamma")?;
    let g2 = gamma0 * gamma0;
    let numerator =
        (point(first)? - x_star).norm_squared() + 2.0 * alpha0 * g2 / (1.0 - g2) * gap(first, f_star);
    for r in traj.records.iter().skip(2) {
        let sum = r.cum_alpha - alpha0;
        chk.check(r.k, gap(r, f_star), numerator / (2.0 * sum));
    }
    Ok(chk.finish())
}

/// Weight of the displacement term in `V^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VpWeight {
    /// `(α_{k-1}/α_k)²`, under which the decrease condition follows from the law.
    RatioSquared,
    /// `α_{k-1}/α_k`.
    Ratio,
}

impl VpWeight {
    fn apply(self, ratio: f64) -> f64 {
        match self {
            VpWeight::RatioSquared => ratio * ratio,
            VpWeight::Ratio => ratio,
        }
    }
}

/// Decrease of `V^p_k = ‖x_k−x*‖² + w_k‖x_{k+1}−x_k‖²` along the growth-capped
/// law `α_k = γ_k/(a_kL_k)`, `a_k ∈ (0, γ_k]`:
/// `V^p_{k+1} − V^p_k ≤ −(α_{k-1}²/α_k² − γ_k²/a_k²)‖x_{k+1}−x_k‖² − 2α_kF_{k+1}`.
///
/// `γ_k` and `a_k` are read from the trajectory. Needs `x_{k+2}`, so the last
/// two steps are not checked.
pub fn check_vp_decrease(traj: &Trajectory, x_star: &Vector, f_star: f64, tol: Tolerance) -> Result<CertReport> {
    check_vp_decrease_weighted(traj, x_star, f_star, VpWeight::RatioSquared, tol)
}

pub fn check_vp_decrease_weighted(
    traj: &Trajectory,
    x_star: &Vector,
    f_star: f64,
    weight: VpWeight,
    tol: Tolerance,
) -> Result<CertReport> {
    if traj.delta() != 0.0 {
        return Err(Error::InvalidUsage("the V^p check assumes an unperturbed run".into()));
    }
    let (alpha_init, _) = traj
        .initial_state
        .ok_or_else(|| Error::InvalidUsage("trajectory carries no initial stepsize".into()))?;
    require_dense(traj, "the V^p check")?;
    let name = match weight {
        VpWeight::RatioSquared => "vp_decrease",
        VpWeight::Ratio => "vp_decrease_linear_weight",
    };
    let mut chk = Checker::new(name, tol);
    let recs = &traj.records;
    let mut alpha_prev = alpha_init;
    for i in 0..recs.len().saturating_sub(2) {
        let (r0, r1, r2) = (&recs[i], &recs[i + 1], &recs[i + 2]);
        let alpha = step_field(r0, |s| Some(s.alpha), "alpha")?;
        let gamma = step_field(r0, |s| s.gamma, "gamma")?;
        let a = step_field(r0, |s| s.slack, "slack")?;
        if r1.step.is_none() {
            chk.skip();
            continue;
        }
        let alpha_next = step_field(r1, |s| Some(s.alpha), "alpha")?;
        if !(a > 0.0 && a <= gamma) {
            chk.hypothesis_failed(format!("k={}: a = {a} outside (0, γ = {gamma}]", r0.k));
            alpha_prev = alpha;
            continue;
        }
        let (x0, x1, x2) = (point(r0)?, point(r1)?, point(r2)?);
        let d0 = (&x1 - &x0).norm_squared();
        let d1 = (&x2 - &x1).norm_squared();
        let v0 = (&x0 - x_star).norm_squared() + weight.apply(alpha_prev / alpha) * d0;
        let v1 = (&x1 - x_star).norm_squared() + weight.apply(alpha / alpha_next) * d1;
        let ratio = alpha_prev / alpha;
        let rhs = -(ratio * ratio - gamma * gamma / (a * a)) * d0 - 2.0 * alpha * gap(r1, f_star);
        chk.check(r0.k, v1 - v0, rhs);
        alpha_prev = alpha;
    }
    chk.skipped += recs.len().min(2);
    Ok(chk.finish())
}

/// `V^p_k` for each step that has a successor, with the squared weight.
pub fn vp_values(traj: &Trajectory, x_star: &Vector) -> Result<Vec<(usize, f64)>> {
    let Some((alpha_init, _)) = traj.initial_state else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut alpha_prev = alpha_init;
    for w in traj.records.windows(2) {
        let (Some(alpha), Some(x0), Some(x1)) = (w[0].alpha(), w[0].point(), w[1].point()) else {
            break;
        };
        let ratio = alpha_prev / alpha;
        out.push((w[0].k, (&x0 - x_star).norm_squared() + ratio * ratio * (&x1 - &x0).norm_squared()));
        alpha_prev = alpha;
    }
    Ok(out)
}

/// Samples `n_pairs` Gaussian pairs around `center` and checks
/// `f(y) ≥ f(x) + ⟨∇f(x), y−x⟩ + ‖∇f(y)−∇f(x)‖²/(2L_s)`.
pub fn check_cocoercivity(
    obj: &dyn Objective,
    l_s: f64,
    n_pairs: usize,
    center: &Vector,
    radius: f64,
    seed: u64,
    tol: Tolerance,
) -> Result<CertReport> {
    check_l_s(l_s)?;
    check_dim(obj.dim(), center.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        center + Vector::from_fn(obj.dim(), |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            radius * z
        })
    };
    let mut chk = Checker::new("cocoercivity", tol);
    for i in 0..n_pairs {
        let x = draw();
        let y = draw();
        let gx = obj.gradient(&x);
        let gy = obj.gradient(&y);
        let lhs = obj.value(&x) + gx.dot(&(&y - &x)) + (&gy - &gx).norm_squared() / (2.0 * l_s);
        chk.check(i, lhs, obj.value(&y));
    }
    Ok(chk.finish())
}

/// Running median of a growing sequence, kept sorted.
struct RunningMedian(Vec<f64>);

impl RunningMedian {
    fn push(&mut self, v: f64) {
        let at = self.0.partition_point(|x| *x < v);
        self.0.insert(at, v);
    }

    fn median(&self) -> f64 {
        let n = self.0.len();
        if n % 2 == 1 {
            self.0[n / 2]
        } else {
            0.5 * (self.0[n / 2 - 1] + self.0[n / 2])
        }
    }
}

/// Boundedness of `k·F_k` and `k·‖∇f(x_k)‖`: over the last half of the run
/// each product must stay within ten times the running median of its prefix.
///
/// The rate constants are not available in closed form, so this checks the
/// qualitative `O(1/k)` claim. Steps must satisfy `L_sα ∈ (0, 2)`; the
/// asymptotic restrictions on `liminf`/`limsup` of `L_sα_k` cannot be checked
/// on a finite run.
pub fn check_theorem1_rates(traj: &Trajectory, l_s: f64, f_star: f64, tol: Tolerance) -> Result<CertReport> {
    check_l_s(l_s)?;
    require_dense(traj, "the rate products")?;
    let mut chk = Checker::new("theorem1_rates", tol);
    for r in &traj.records {
        if let Some(alpha) = applied(traj, r) {
            if !smooth_range_ok(l_s, alpha) {
                chk.hypothesis_failed(format!("k={}: L_s·α = {} outside the admissible range", r.k, l_s * alpha));
            }
        }
    }
    let last = traj.iterations();
    let mut med_f = RunningMedian(Vec::with_capacity(traj.records.len()));
    let mut med_g = RunningMedian(Vec::with_capacity(traj.records.len()));
    for r in &traj.records {
        let k = r.k as f64;
        let pf = k * gap(r, f_star).max(0.0);
        let pg = k * r.grad_norm;
        med_f.push(pf);
        med_g.push(pg);
        if 2 * r.k >= last && r.k > 0 {
            chk.check(r.k, pf, RATE_MEDIAN_FACTOR * med_f.median());
            chk.check(r.k, pg, RATE_MEDIAN_FACTOR * med_g.median());
        } else {
            chk.skip();
        }
    }
    Ok(chk.finish())
}

/// Replays `x_{k+1} = x_k − (1+δ)α_k∇f(x_k)` against the recorded iterates.
pub fn check_recursion_replay(traj: &Trajectory, obj: &dyn Objective, tol: Tolerance) -> Result<CertReport> {
    let mut chk = Checker::new("recursion_replay", tol);
    for (a, b) in pairs(traj, &mut chk) {
        let alpha = applied(traj, a).unwrap_or_default();
        let xa = point(a)?;
        let predicted = &xa - alpha * obj.gradient(&xa);
        let xb = point(b)?;
        chk.check(a.k, (&xb - &predicted).norm(), 0.0);
        let last = chk.entries.len() - 1;
        // scale the relative part by the iterate size, not the (zero) right side
        chk.entries[last].allowance = tol.abs + tol.rel * xb.norm().max(xa.norm());
    }
    Ok(chk.finish())
}

/// Feasibility of each recorded AFFGD or growth-capped step: the growth cap
/// recomputed from the stepsize history, and `α_k·L(x_k − α_k∇f(x_k), x_k)`
/// against the first-bound threshold. Both hold with [`CONSTRAINT_SLACK`]
/// relative slack.
pub fn check_affgd_constraints(traj: &Trajectory, obj: &dyn Objective) -> Result<CertReport> {
    enum Law {
        Affgd,
        Capped { gamma: f64, slack: f64 },
    }
    let law = match traj.config.controller {
        ControllerSpec::Affgd { .. } => Law::Affgd,
        ControllerSpec::GrowthCapped { gamma, slack, .. } => Law::Capped { gamma, slack },
        _ => return Err(Error::InvalidUsage(format!("trajectory '{}' has no feasibility set to replay", traj.label))),
    };
    let (mut alpha_prev, mut gamma_prev) = traj
        .initial_state
        .ok_or_else(|| Error::InvalidUsage("trajectory carries no initial stepsize".into()))?;
    require_dense(traj, "the constraint replay")?;
    let tol = Tolerance { abs: 0.0, rel: CONSTRAINT_SLACK };
    let mut chk = Checker::new("affgd_constraints", tol);
    for r in &traj.records {
        let Some(step) = r.step else { continue };
        let alpha = step.alpha;
        let (cap, threshold, gamma) = match law {
            Law::Affgd => {
                let gamma = step_field(r, |s| s.gamma, "gamma")?;
                (alpha2_bound(alpha_prev, gamma, gamma_prev), gamma, gamma)
            }
            Law::Capped { gamma, slack } => (slack / gamma * alpha_prev, gamma / slack, gamma),
        };
        chk.check(r.k, alpha, cap);
        let x = point(r)?;
        let g = obj.gradient(&x);
        if g.norm() > DEGENERATE_NORM {
            let probe = CurvatureProbe::new(obj, &x, &g, alpha)?;
            chk.check(r.k, alpha * probe.estimate, threshold);
        }
        alpha_prev = alpha;
        gamma_prev = gamma;
    }
    Ok(chk.finish())
}

/// `min_k α_k ≥ factor·γ_min / L_hull`, where `L_hull` is the largest recorded
/// local estimate and `γ_min` the smallest recorded `γ_k`.
pub fn check_stepsize_separation(traj: &Trajectory, factor: f64) -> Result<CertReport> {
    let steps: Vec<_> = traj.records.iter().filter_map(|r| r.step.map(|s| (r.k, s))).collect();
    let mut chk = Checker::new("stepsize_separation", Tolerance::absolute(1e-12));
    if steps.is_empty() {
        return Ok(chk.finish());
    }
    let gamma_min = steps
        .iter()
        .map(|(_, s)| s.gamma)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::InvalidUsage("steps carry no gamma".into()))?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let l_hull = steps.iter().filter_map(|(_, s)| s.local_l).fold(0.0, f64::max);
    if l_hull <= 0.0 {
        chk.notes.push("no curvature observed".into());
        return Ok(chk.finish());
    }
    let bound = factor * gamma_min / l_hull;
    let (k, s) = steps
        .iter()
        .min_by(|a, b| a.1.alpha.total_cmp(&b.1.alpha))
        .copied()
        .expect("nonempty");
    chk.check(k, bound, s.alpha);
    chk.notes.push(format!("gamma_min={gamma_min} L_hull={l_hull} bound={bound}"));
    Ok(chk.finish())
}

/// Lyapunov values and per-check residuals at one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovRecord {
    pub k: usize,
    /// `‖x_k − x*‖²`.
    pub v_s: f64,
    pub v_a: Option<f64>,
    pub v_p: Option<f64>,
    /// Residual `lhs − rhs` of every check evaluated at `k`, by check name.
    pub residuals: BTreeMap<String, f64>,
}

/// Assembles per-iteration Lyapunov values of a trajectory together with the
/// residuals reported by `reports`.
pub fn lyapunov_records(traj: &Trajectory, optimum: &Optimum, reports: &[CertReport]) -> Result<Vec<LyapunovRecord>> {
    let x_star = optimum.point();
    let vp: BTreeMap<usize, f64> = vp_values(traj, &x_star)?.into_iter().collect();
    let mut out = Vec::with_capacity(traj.records.len());
    let mut prev = traj.initial_state;
    let va_known = matches!(traj.config.controller, ControllerSpec::Affgd { .. });
    for r in &traj.records {
        let x = point(r)?;
        let v_a = match (va_known, prev) {
            (true, Some((a, g))) => Some(va_value(&x, &x_star, r.f - optimum.f, a, g)),
            _ => None,
        };
        prev = r.step.and_then(|s| s.gamma.map(|g| (s.alpha, g)));
        let mut residuals = BTreeMap::new();
        for rep in reports {
            for e in rep.entries.iter().filter(|e| e.k == r.k) {
                let slot = residuals.entry(rep.name.clone()).or_insert(f64::NEG_INFINITY);
                *slot = slot.max(e.residual());
            }
        }
        out.push(LyapunovRecord {
            k: r.k,
            v_s: (&x - &x_star).norm_squared(),
            v_a,
            v_p: vp.get(&r.k).copied(),
            residuals,
        });
    }
    Ok(out)
}

/// Named groups of certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma1,
    Thm1,
    Thm2,
    Lemma4,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lemma1, Suite::Thm1, Suite::Thm2, Suite::Lemma4];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Thm1 => "thm1",
            Suite::Thm2 => "thm2",
            Suite::Lemma4 => "lemma4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

/// Runs the certificates of `suite` on `traj`.
///
/// Every suite includes the recursion replay, so a trajectory whose iterates
/// do not follow from its stepsizes fails regardless of the inequalities.
pub fn run_suite(
    suite: Suite,
    traj: &Trajectory,
    obj: &dyn Objective,
    optimum: &Optimum,
    tol: Tolerance,
) -> Result<Vec<CertReport>> {
    let x_star = optimum.point();
    let f_star = optimum.f;
    let mut out = vec![check_recursion_replay(traj, obj, tol)?];
    match suite {
        Suite::Lemma1 => {
            out.push(check_descent_lemma(traj, obj, f_star, tol)?);
            out.push(check_halfrange_vs(traj, &x_star, f_star, tol)?);
        }
        Suite::Thm1 => {
            let l_s = obj
                .smoothness_constant()
                .ok_or_else(|| Error::InvalidUsage("this suite needs a global smoothness constant".into()))?;
            out.push(check_vs_decrease(traj, obj, &x_star, l_s, tol)?);
            out.push(check_grad_monotonicity(traj, obj, l_s, tol)?);
            out.push(check_theorem1_rates(traj, l_s, f_star, tol)?);
        }
        Suite::Thm2 => {
            out.push(check_affgd_constraints(traj, obj)?);
            out.push(check_va_decrease(traj, &x_star, f_star, tol)?);
            out.push(check_rate_bound(traj, &x_star, f_star, tol)?);
        }
        Suite::Lemma4 => {
            out.push(check_affgd_constraints(traj, obj)?);
            out.push(check_vp_decrease(traj, &x_star, f_star, tol)?);
        }
    }
    Ok(out)
}
