use serde::{Deserialize, Serialize};

use super::{StepDecision, StepPolicy};
use crate::error::{invalid, Error, Result};
use crate::geometry::{solve_alpha1, LinesearchOptions};
use crate::problems::Objective;
use crate::Vector;

pub const DEFAULT_ALPHA_INIT: f64 = 1e-3;
pub const DEFAULT_THETA: f64 = 0.9;
pub const GAMMA_CLAMP: (f64, f64) = (0.05, 0.99);

/// Which upper bound produced the emitted stepsize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActiveBound {
    /// Feedforward bound `γ_k / L_k`.
    First,
    /// Feedback growth cap.
    Second,
    Tie,
}

impl ActiveBound {
    pub fn as_str(self) -> &'static str {
        match self {
            ActiveBound::First => "first",
            ActiveBound::Second => "second",
            ActiveBound::Tie => "tie",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    Constant,
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSchedule {
    pub mode: GammaMode,
    pub gamma0: f64,
    pub theta: f64,
    pub clamp: (f64, f64),
}

impl GammaSchedule {
    pub fn constant(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (0,1), got {gamma}")));
        }
        let s = Self {
            mode: GammaMode::Constant,
            gamma0: gamma,
            theta: DEFAULT_THETA,
            clamp: (GAMMA_CLAMP.0.min(gamma), GAMMA_CLAMP.1.max(gamma)),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn adaptive(gamma0: f64, theta: f64) -> Result<Self> {
        let s = Self {
            mode: GammaMode::Adaptive,
            gamma0,
            theta,
            clamp: GAMMA_CLAMP,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.clamp;
        if !(0.0 < lo && lo <= self.gamma0 && self.gamma0 <= hi && hi < 1.0) {
            return Err(invalid(format!(
                "gamma schedule needs 0 < {lo} <= {} <= {hi} < 1",
                self.gamma0
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(invalid(format!("theta must lie in (0,1), got {}", self.theta)));
        }
        Ok(())
    }

    fn project(&self, gamma: f64) -> f64 {
        gamma.clamp(self.clamp.0, self.clamp.1)
    }
}

/// Everything the AFFGD law carries from one iteration to the next.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub alpha_prev: f64,
    pub gamma_prev: f64,
    pub gamma_curr: f64,
    /// Bound that was active at the previous step; `None` before the first.
    pub active_bound: Option<ActiveBound>,
    pub iteration: usize,
}

impl ControllerState {
    /// `γ_{-1} = γ_0`, so the first growth cap is `α_{-1}/γ_0²`.
    pub fn new(alpha_init: f64, gamma0: f64) -> Result<Self> {
        let s = Self {
            alpha_prev: alpha_init,
            gamma_prev: gamma0,
            gamma_curr: gamma0,
            active_bound: None,
            iteration: 0,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha_prev > 0.0 && self.alpha_prev.is_finite()) {
            return Err(invalid(format!("alpha_prev must be positive, got {}", self.alpha_prev)));
        }
        for g in [self.gamma_prev, self.gamma_curr] {
            if !(g > 0.0 && g < 1.0) {
                return Err(invalid(format!("gamma must lie in (0,1), got {g}")));
            }
        }
        Ok(())
    }
}

/// Feedback growth cap `(α_{k-1}/γ_k²) · (1 − γ_k²)/(1 − γ_{k-1}²)`.
pub fn alpha2_bound(alpha_prev: f64, gamma_curr: f64, gamma_prev: f64) -> f64 {
    let g2 = gamma_curr * gamma_curr;
    alpha_prev / g2 * ((1.0 - g2) / (1.0 - gamma_prev * gamma_prev))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffgdStep {
    pub alpha: f64,
    pub alpha2: f64,
    pub local_l: f64,
    pub active: ActiveBound,
}

/// One AFFGD step: compute the growth cap, then backtrack from it until the
/// feedforward condition `α · L(x − α∇f(x), x) ≤ γ_k` holds.
pub fn affgd_step(
    state: &ControllerState,
    obj: &dyn Objective,
    x: &Vector,
    grad: &Vector,
    opts: &LinesearchOptions,
) -> Result<(AffgdStep, ControllerState)> {
    state.validate()?;
    let alpha2 = alpha2_bound(state.alpha_prev, state.gamma_curr, state.gamma_prev);
    let ls = solve_alpha1(obj, x, grad, state.gamma_curr, alpha2, opts)?;
    let alpha = ls.accepted_alpha;
    let active = if ls.tie {
        ActiveBound::Tie
    } else if ls.hit_cap {
        ActiveBound::Second
    } else if alpha < alpha2 * (1.0 - crate::geometry::TIE_RTOL) {
        ActiveBound::First
    } else {
        ActiveBound::Tie
    };
    let next = ControllerState {
        alpha_prev: alpha,
        gamma_prev: state.gamma_curr,
        gamma_curr: state.gamma_curr,
        active_bound: Some(active),
        iteration: state.iteration + 1,
    };
    Ok((
        AffgdStep {
            alpha,
            alpha2,
            local_l: ls.local_l,
            active,
        },
        next,
    ))
}

/// Adaptive γ recursion driven by the last active bound, projected onto the
/// schedule's clamp interval.
pub fn update_gamma(state: &ControllerState, schedule: &GammaSchedule) -> Result<f64> {
    if schedule.mode != GammaMode::Adaptive {
        return Err(Error::InvalidUsage("update_gamma called on a constant schedule".into()));
    }
    let prev = state.gamma_prev;
    Ok(match state.active_bound {
        Some(ActiveBound::First) => schedule.project(prev / schedule.theta),
        Some(ActiveBound::Second) => schedule.project(schedule.theta * prev),
        Some(ActiveBound::Tie) | None => prev,
    })
}

/// Tightened second bound for an inexact first bound `γ/(a·L_k)`, `a ∈ (γ, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledGamma {
    pub gamma_tilde: f64,
    pub slack: f64,
}

impl ScaledGamma {
    /// Rescaled growth cap given the previous step and previous `γ̃`.
    pub fn alpha2(&self, alpha_prev: f64, gamma_tilde_prev: f64) -> f64 {
        alpha2_bound(alpha_prev, self.gamma_tilde, gamma_tilde_prev)
    }
}

pub fn scaled_gamma_rebound(gamma: f64, a: f64) -> Result<ScaledGamma> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("gamma must lie in (0,1), got {gamma}")));
    }
    if !(a > gamma && a < 1.0) {
        return Err(invalid(format!(
            "slack {a} outside ({gamma}, 1); use the growth-capped law instead"
        )));
    }
    Ok(ScaledGamma {
        gamma_tilde: gamma / a,
        slack: a,
    })
}

/// `min(candidate, (a/γ)·α_{k-1})`: the growth cap that keeps the perturbed
/// Lyapunov function decreasing when `a ≤ γ`.
pub fn robust_growth_cap(alpha_candidate: f64, alpha_prev: f64, gamma: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a <= gamma) {
        return Err(invalid(format!("slack {a} outside (0, {gamma}]")));
    }
    if !(alpha_prev > 0.0) {
        return Err(invalid(format!("alpha_prev must be positive, got {alpha_prev}")));
    }
    Ok(alpha_candidate.min(a / gamma * alpha_prev))
}

/// AFFGD stepsize policy, optionally with an inexact first bound.
#[derive(Clone, Debug)]
pub struct Affgd {
    schedule: GammaSchedule,
    state: ControllerState,
    alpha_init: f64,
    opts: LinesearchOptions,
    slack: Option<f64>,
}

impl Affgd {
    pub fn new(schedule: GammaSchedule, alpha_init: f64) -> Result<Self> {
        schedule.validate()?;
        Ok(Self {
            state: ControllerState::new(alpha_init, schedule.gamma0)?,
            schedule,
            alpha_init,
            opts: LinesearchOptions::default(),
            slack: None,
        })
    }

    /// Runs the law with `γ̃ = γ/a` in both bounds, so the first bound is
    /// the relaxed `γ/(a·L_k)` and the second is tightened to match.
    pub fn with_slack(schedule: GammaSchedule, alpha_init: f64, a: f64) -> Result<Self> {
        if schedule.mode != GammaMode::Constant {
            return Err(invalid("slack is only supported with a constant gamma"));
        }
        let scaled = scaled_gamma_rebound(schedule.gamma0, a)?;
        let tilde = GammaSchedule::constant(scaled.gamma_tilde)?;
        let mut out = Self::new(tilde, alpha_init)?;
        out.slack = Some(a);
        Ok(out)
    }

    pub fn with_linesearch(mut self, opts: LinesearchOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }
}

impl StepPolicy for Affgd {
    fn next_step(&mut self, obj: &dyn Objective, x: &Vector, grad: &Vector, _k: usize) -> Result<StepDecision> {
        if self.schedule.mode == GammaMode::Adaptive && self.state.active_bound.is_some() {
            self.state.gamma_curr = update_gamma(&self.state, &self.schedule)?;
        }
        let (step, next) = affgd_step(&self.state, obj, x, grad, &self.opts)?;
        self.state = next;
        Ok(StepDecision {
            alpha: step.alpha,
            gamma: Some(next.gamma_prev),
            alpha2: Some(step.alpha2),
            active: Some(step.active),
            slack: self.slack,
        })
    }

    fn initial_state(&self) -> Option<(f64, f64)> {
        Some((self.alpha_init, self.schedule.gamma0))
    }
}

/// The perturbed law `α_k = γ/(a·L_k)` with `a ∈ (0, γ]`, held under the
/// growth cap `α_k ≤ (a/γ)·α_{k-1}`.
#[derive(Clone, Debug)]
pub struct GrowthCapped {
    gamma: f64,
    slack: f64,
    alpha_prev: f64,
    alpha_init: f64,
    search_cap: f64,
    opts: LinesearchOptions,
}

impl GrowthCapped {
    pub fn new(gamma: f64, slack: f64, alpha_init: f64, search_cap: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (0,1), got {gamma}")));
        }
        robust_growth_cap(search_cap, alpha_init, gamma, slack)?;
        Ok(Self {
            gamma,
            slack,
            alpha_prev: alpha_init,
            alpha_init,
            search_cap,
            opts: LinesearchOptions::default(),
        })
    }
}

impl StepPolicy for GrowthCapped {
    fn next_step(&mut self, obj: &dyn Objective, x: &Vector, grad: &Vector, _k: usize) -> Result<StepDecision> {
        let cap = robust_growth_cap(self.search_cap, self.alpha_prev, self.gamma, self.slack)?;
        let ls = solve_alpha1(obj, x, grad, self.gamma / self.slack, cap, &self.opts)?;
        self.alpha_prev = ls.accepted_alpha;
        Ok(StepDecision {
            alpha: ls.accepted_alpha,
            gamma: Some(self.gamma),
            alpha2: Some(cap),
            active: Some(if ls.hit_cap { ActiveBound::Second } else { ActiveBound::First }),
            slack: Some(self.slack),
        })
    }

    fn initial_state(&self) -> Option<(f64, f64)> {
        Some((self.alpha_init, self.gamma))
    }
}
