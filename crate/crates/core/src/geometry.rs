//! Two-point curvature estimates and the linesearch for the feedforward bound.

use crate::error::{Error, Result};
use crate::problems::Objective;
use crate::{Matrix, Vector, DEGENERATE_NORM};

pub const DEFAULT_SHRINK: f64 = 0.7;
pub const DEFAULT_MAX_PROBES: usize = 200;

/// Relative band around the cap within which both bounds count as active.
pub const TIE_RTOL: f64 = 1e-9;

/// `‖∇f(y) − ∇f(x)‖ / ‖y − x‖`.
pub fn local_l(obj: &dyn Objective, x: &Vector, y: &Vector) -> Result<f64> {
    obj.check_point(x)?;
    obj.check_point(y)?;
    let dist = (y - x).norm();
    if dist <= DEGENERATE_NORM {
        return Err(Error::DegenerateProbe("coincident points".into()));
    }
    Ok((obj.gradient(y) - obj.gradient(x)).norm() / dist)
}

/// Same estimate from precomputed gradients.
pub(crate) fn secant_l(x: &Vector, y: &Vector, gx: &Vector, gy: &Vector) -> Option<f64> {
    let dist = (y - x).norm();
    (dist > DEGENERATE_NORM).then(|| (gy - gx).norm() / dist)
}

/// `‖Mg‖ / ‖g‖`: the local estimate of a quadratic, independent of the step.
pub fn quadratic_local_l(m: &Matrix, g: &Vector) -> Result<f64> {
    let gn = g.norm();
    if gn <= DEGENERATE_NORM {
        return Err(Error::DegenerateProbe("zero gradient".into()));
    }
    Ok((m * g).norm() / gn)
}

/// One evaluation of the local estimate along the gradient step `x − αg`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureProbe {
    pub base_point: Vector,
    pub gradient_at_base: Vector,
    pub trial_step: f64,
    pub estimate: f64,
}

impl CurvatureProbe {
    pub fn new(obj: &dyn Objective, x: &Vector, g: &Vector, alpha: f64) -> Result<Self> {
        let gn = g.norm();
        if gn <= DEGENERATE_NORM {
            return Err(Error::DegenerateProbe("zero gradient".into()));
        }
        let y = x - alpha * g;
        let estimate = (obj.gradient(&y) - g).norm() / (alpha * gn);
        Ok(Self {
            base_point: x.clone(),
            gradient_at_base: g.clone(),
            trial_step: alpha,
            estimate,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinesearchOptions {
    pub shrink: f64,
    pub max_probes: usize,
}

impl Default for LinesearchOptions {
    fn default() -> Self {
        Self {
            shrink: DEFAULT_SHRINK,
            max_probes: DEFAULT_MAX_PROBES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinesearchResult {
    pub accepted_alpha: f64,
    pub local_l: f64,
    pub probes_used: usize,
    /// The cap itself satisfied the condition.
    pub hit_cap: bool,
    /// Quadratic shortcut only: `γ/L` coincides with the cap up to [`TIE_RTOL`].
    pub tie: bool,
}

/// Largest `α ∈ {cap, cap·s, cap·s², …}` with `α · L(x − α∇f(x), x) ≤ γ`.
///
/// `grad` must be `∇f(x)`. Quadratics with a stored Hessian skip the probing
/// and return `min(cap, γ / L)` with the exact, step-independent `L`.
pub fn solve_alpha1(
    obj: &dyn Objective,
    x: &Vector,
    grad: &Vector,
    gamma: f64,
    cap: f64,
    opts: &LinesearchOptions,
) -> Result<LinesearchResult> {
    if !(gamma > 0.0) {
        return Err(crate::error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(cap > 0.0) || !cap.is_finite() {
        return Err(crate::error::invalid(format!("cap must be positive and finite, got {cap}")));
    }
    if !(opts.shrink > 0.0 && opts.shrink < 1.0) {
        return Err(crate::error::invalid(format!("shrink must lie in (0,1), got {}", opts.shrink)));
    }
    let gn = grad.norm();
    if gn <= DEGENERATE_NORM {
        return Err(Error::DegenerateProbe("zero gradient".into()));
    }

    if let Some(m) = obj.hessian() {
        let l = quadratic_local_l(m, grad)?;
        let limit = if l > 0.0 { gamma / l } else { f64::INFINITY };
        let tie = (limit - cap).abs() <= TIE_RTOL * cap;
        let hit_cap = cap <= limit;
        return Ok(LinesearchResult {
            accepted_alpha: limit.min(cap),
            local_l: l,
            probes_used: 0,
            hit_cap,
            tie,
        });
    }

    let mut alpha = cap;
    for probe in 1..=opts.max_probes {
        let y = x - alpha * grad;
        let l = (obj.gradient(&y) - grad).norm() / (alpha * gn);
        if alpha * l <= gamma {
            return Ok(LinesearchResult {
                accepted_alpha: alpha,
                local_l: l,
                probes_used: probe,
                hit_cap: probe == 1,
                tie: false,
            });
        }
        alpha *= opts.shrink;
    }
    Err(Error::LinesearchFailure {
        probes: opts.max_probes,
        last_alpha: alpha / opts.shrink,
    })
}

/// Verification oracle: the largest point of a log-spaced grid over
/// `[1e-8·cap, cap]` satisfying `α · L(x − α∇f(x), x) ≤ γ`, or `None`.
pub fn grid_search_alpha1(
    obj: &dyn Objective,
    x: &Vector,
    gamma: f64,
    cap: f64,
    grid_points: usize,
) -> Result<Option<f64>> {
    if grid_points < 100 {
        return Err(crate::error::invalid("grid search needs at least 100 points"));
    }
    obj.check_point(x)?;
    let g = obj.gradient(x);
    let gn = g.norm();
    if gn <= DEGENERATE_NORM {
        return Err(Error::DegenerateProbe("zero gradient".into()));
    }
    let lo = (1e-8 * cap).ln();
    let hi = cap.ln();
    let mut best = None;
    for i in 0..grid_points {
        let t = i as f64 / (grid_points - 1) as f64;
        let alpha = if i + 1 == grid_points { cap } else { (lo + t * (hi - lo)).exp() };
        let y = x - alpha * &g;
        let diff = (obj.gradient(&y) - &g).norm();
        // α·L = ‖Δg‖/‖g‖
        if diff / gn <= gamma {
            best = Some(alpha);
        }
    }
    Ok(best)
}
