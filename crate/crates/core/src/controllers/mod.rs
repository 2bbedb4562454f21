//! Stepsize policies.

mod affgd;
mod external;

pub use affgd::{
    affgd_step, alpha2_bound, robust_growth_cap, scaled_gamma_rebound, update_gamma, ActiveBound,
    Affgd, AffgdStep, ControllerState, GammaMode, GammaSchedule, GrowthCapped, ScaledGamma,
    DEFAULT_ALPHA_INIT, DEFAULT_THETA, GAMMA_CLAMP,
};
pub use external::{AdGd, AdaPgm};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{solve_alpha1, LinesearchOptions};
use crate::problems::Objective;
use crate::Vector;

pub const DEFAULT_BLS_CAP: f64 = 1e4;
pub const DEFAULT_HORIZON_SCALE: f64 = 50.0;

/// What a policy decided at one iteration. Only `alpha` is mandatory; the
/// rest is bookkeeping the certificates replay.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDecision {
    pub alpha: f64,
    pub gamma: Option<f64>,
    /// Growth cap the step was searched under.
    pub alpha2: Option<f64>,
    pub active: Option<ActiveBound>,
    /// Slack `a` of an inexact first bound.
    pub slack: Option<f64>,
}

impl StepDecision {
    pub fn plain(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }
}

/// A stepsize rule. One instance drives exactly one run.
pub trait StepPolicy: Send {
    /// Stepsize for iteration `k` at `x` with `grad = ∇f(x)`.
    fn next_step(&mut self, obj: &dyn Objective, x: &Vector, grad: &Vector, k: usize) -> Result<StepDecision>;

    /// `(α_{-1}, γ_{-1})` for laws that carry them.
    fn initial_state(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Fixed stepsize.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantStep {
    alpha: f64,
}

impl ConstantStep {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("stepsize must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// The classical `α = 1/L_s`.
pub fn constant_step(l_s: f64) -> Result<ConstantStep> {
    if !(l_s > 0.0) {
        return Err(invalid(format!("smoothness constant must be positive, got {l_s}")));
    }
    ConstantStep::new(1.0 / l_s)
}

impl StepPolicy for ConstantStep {
    fn next_step(&mut self, _: &dyn Objective, _: &Vector, _: &Vector, _: usize) -> Result<StepDecision> {
        Ok(StepDecision::plain(self.alpha))
    }
}

/// Open-loop ramp `α_k = (2 − 1/(1 + k/h)) / L_s`: starts at `1/L_s`, increases
/// monotonically and tends to `2/L_s`.
pub fn tv_open_loop(l_s: f64, k: usize, horizon_scale: f64) -> Result<f64> {
    if !(l_s > 0.0) || !(horizon_scale > 0.0) {
        return Err(invalid("open-loop ramp needs positive L_s and horizon scale"));
    }
    Ok((2.0 - 1.0 / (1.0 + k as f64 / horizon_scale)) / l_s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpenLoopTv {
    l_s: f64,
    horizon_scale: f64,
    scale: f64,
}

impl OpenLoopTv {
    /// `scale` multiplies the whole ramp (1 = the standard range `[1, 2)/L_s`).
    pub fn new(l_s: f64, horizon_scale: f64, scale: f64) -> Result<Self> {
        tv_open_loop(l_s, 0, horizon_scale)?;
        if !(scale > 0.0) {
            return Err(invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { l_s, horizon_scale, scale })
    }
}

impl StepPolicy for OpenLoopTv {
    fn next_step(&mut self, _: &dyn Objective, _: &Vector, _: &Vector, k: usize) -> Result<StepDecision> {
        Ok(StepDecision::plain(self.scale * tv_open_loop(self.l_s, k, self.horizon_scale)?))
    }
}

/// `α = γ/L_k` by backtracking from a fixed cap, with no growth limit.
pub fn bls_step(obj: &dyn Objective, x: &Vector, grad: &Vector, gamma: f64, cap: f64) -> Result<f64> {
    Ok(solve_alpha1(obj, x, grad, gamma, cap, &LinesearchOptions::default())?.accepted_alpha)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bls {
    gamma: f64,
    cap: f64,
}

impl Bls {
    pub fn new(gamma: f64, cap: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (0,1), got {gamma}")));
        }
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(invalid(format!("cap must be positive, got {cap}")));
        }
        Ok(Self { gamma, cap })
    }
}

impl StepPolicy for Bls {
    fn next_step(&mut self, obj: &dyn Objective, x: &Vector, grad: &Vector, _: usize) -> Result<StepDecision> {
        let alpha = bls_step(obj, x, grad, self.gamma, self.cap)?;
        Ok(StepDecision {
            alpha,
            gamma: Some(self.gamma),
            ..StepDecision::default()
        })
    }
}

/// I.i.d. uniform stepsizes in `[lo, hi) / L_s`, seeded.
#[derive(Clone, Debug)]
pub struct RandomStep {
    lo: f64,
    hi: f64,
    l_s: f64,
    rng: ChaCha8Rng,
}

impl RandomStep {
    pub fn new(lo: f64, hi: f64, l_s: f64, seed: u64) -> Result<Self> {
        if !(0.0 < lo && lo < hi) || !(l_s > 0.0) {
            return Err(invalid(format!("need 0 < lo < hi and L_s > 0, got [{lo}, {hi}), {l_s}")));
        }
        Ok(Self {
            lo,
            hi,
            l_s,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl StepPolicy for RandomStep {
    fn next_step(&mut self, _: &dyn Objective, _: &Vector, _: &Vector, _: usize) -> Result<StepDecision> {
        Ok(StepDecision::plain(self.rng.random_range(self.lo..self.hi) / self.l_s))
    }
}

/// Serializable controller selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    /// `α = scale / L_s`.
    Constant { scale: f64 },
    OpenLoop { horizon_scale: f64, scale: f64 },
    Affgd {
        schedule: GammaSchedule,
        alpha_init: f64,
        /// Inexact first bound `γ/(a·L_k)` with `a ∈ (γ, 1)`.
        slack: Option<f64>,
    },
    Bls { gamma: f64, cap: f64 },
    GrowthCapped { gamma: f64, slack: f64, alpha_init: f64 },
    Random { lo: f64, hi: f64 },
    Adgd { alpha_init: f64 },
    Adagm { alpha_init: f64 },
}

impl ControllerSpec {
    pub fn affgd(gamma: f64) -> Result<Self> {
        Ok(Self::Affgd {
            schedule: GammaSchedule::constant(gamma)?,
            alpha_init: DEFAULT_ALPHA_INIT,
            slack: None,
        })
    }

    pub fn affgd_adaptive(gamma0: f64, theta: f64) -> Result<Self> {
        Ok(Self::Affgd {
            schedule: GammaSchedule::adaptive(gamma0, theta)?,
            alpha_init: DEFAULT_ALPHA_INIT,
            slack: None,
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Constant { scale } if *scale == 1.0 => "gd".into(),
            Self::Constant { scale } => format!("gd_x{scale}"),
            Self::OpenLoop { scale, .. } if *scale == 1.0 => "tv".into(),
            Self::OpenLoop { scale, .. } => format!("tv_x{scale}"),
            Self::Affgd { schedule, slack, .. } => {
                let base = match schedule.mode {
                    GammaMode::Constant => format!("affgd_g{}", schedule.gamma0),
                    GammaMode::Adaptive => format!("affgd_adaptive_g{}_t{}", schedule.gamma0, schedule.theta),
                };
                match slack {
                    Some(a) => format!("{base}_a{a}"),
                    None => base,
                }
            }
            Self::Bls { gamma, .. } => format!("bls_g{gamma}"),
            Self::GrowthCapped { gamma, slack, .. } => format!("capped_g{gamma}_a{slack}"),
            Self::Random { .. } => "random".into(),
            Self::Adgd { .. } => "adgd".into(),
            Self::Adagm { .. } => "adagm".into(),
        }
    }

    pub fn is_affgd(&self) -> bool {
        matches!(self, Self::Affgd { .. })
    }

    pub fn build(&self, obj: &dyn Objective, seed: u64) -> Result<Box<dyn StepPolicy>> {
        let l_s = || {
            obj.smoothness_constant()
                .filter(|l| *l > 0.0)
                .ok_or_else(|| invalid("controller needs a positive smoothness constant"))
        };
        Ok(match *self {
            Self::Constant { scale } => Box::new(ConstantStep::new(scale / l_s()?)?),
            Self::OpenLoop { horizon_scale, scale } => Box::new(OpenLoopTv::new(l_s()?, horizon_scale, scale)?),
            Self::Affgd { schedule, alpha_init, slack } => match slack {
                Some(a) => Box::new(Affgd::with_slack(schedule, alpha_init, a)?),
                None => Box::new(Affgd::new(schedule, alpha_init)?),
            },
            Self::Bls { gamma, cap } => Box::new(Bls::new(gamma, cap)?),
            Self::GrowthCapped { gamma, slack, alpha_init } => {
                Box::new(GrowthCapped::new(gamma, slack, alpha_init, DEFAULT_BLS_CAP)?)
            }
            Self::Random { lo, hi } => Box::new(RandomStep::new(lo, hi, l_s()?, seed)?),
            Self::Adgd { alpha_init } => Box::new(AdGd::new(alpha_init)?),
            Self::Adagm { alpha_init } => Box::new(AdaPgm::new(alpha_init)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic_objective, FnObjective};
    use crate::Matrix;

    #[test]
    fn constant_step_is_stateless() {
        let mut p = constant_step(4.0).unwrap();
        let q = FnObjective::new(1, |_| 0.0, |x| x.clone());
        let x = Vector::zeros(1);
        for k in 0..10 {
            assert_eq!(p.next_step(&q, &x, &x, k).unwrap().alpha, 0.25);
        }
        assert!(constant_step(0.0).is_err());
        assert!(constant_step(-1.0).is_err());
    }

    #[test]
    fn open_loop_ramp() {
        assert_eq!(tv_open_loop(2.0, 0, 50.0).unwrap(), 0.5);
        let mut prev = 0.0;
        for k in 0..=1000 {
            let a = tv_open_loop(1.0, k, 50.0).unwrap();
            assert!(a > prev && a < 2.0);
            prev = a;
        }
        assert!(2.0 - tv_open_loop(1.0, 10_000_000, 50.0).unwrap() < 1e-5);
        assert!(tv_open_loop(0.0, 1, 50.0).is_err());
        assert!(tv_open_loop(1.0, 1, 0.0).is_err());
    }

    #[test]
    fn bls_on_quadratics() {
        let q = quadratic_objective(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let x = Vector::from_vec(vec![1.0, 1.0]);
        assert!((bls_step(&q, &x, &x, 0.7, DEFAULT_BLS_CAP).unwrap() - 0.7).abs() < 1e-15);
        let q = quadratic_objective(Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0])), Vector::zeros(2))
            .unwrap();
        let x = Vector::from_vec(vec![0.0, 1.0]);
        let g = q.gradient(&x);
        assert!((bls_step(&q, &x, &g, 0.7, DEFAULT_BLS_CAP).unwrap() - 0.175).abs() < 1e-15);
    }

    #[test]
    fn random_steps_stay_in_range_and_repeat() {
        let q = FnObjective::new(1, |_| 0.0, |x| x.clone());
        let x = Vector::zeros(1);
        let mut a = RandomStep::new(0.05, 1.95, 4.0, 9).unwrap();
        let mut b = RandomStep::new(0.05, 1.95, 4.0, 9).unwrap();
        for k in 0..100 {
            let sa = a.next_step(&q, &x, &x, k).unwrap().alpha;
            assert_eq!(sa, b.next_step(&q, &x, &x, k).unwrap().alpha);
            assert!((0.0125..0.4875).contains(&sa));
        }
    }

    #[test]
    fn labels_are_distinct() {
        let specs = [
            ControllerSpec::Constant { scale: 1.0 },
            ControllerSpec::OpenLoop { horizon_scale: 50.0, scale: 1.0 },
            ControllerSpec::affgd(0.7).unwrap(),
            ControllerSpec::affgd_adaptive(0.95, 0.9).unwrap(),
            ControllerSpec::Bls { gamma: 0.7, cap: DEFAULT_BLS_CAP },
            ControllerSpec::Adgd { alpha_init: 1e-3 },
            ControllerSpec::Adagm { alpha_init: 1e-3 },
        ];
        let mut labels: Vec<_> = specs.iter().map(|s| s.label()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), specs.len());
    }
}
