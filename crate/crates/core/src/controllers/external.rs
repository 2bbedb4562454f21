//! Non-normative reimplementations of two published past-information adaptive
//! GD schemes, used only as comparison baselines. They are transcribed from
//! their own publications; nothing in the certificates depends on them.

use super::{StepDecision, StepPolicy};
use crate::error::{invalid, Result};
use crate::geometry::secant_l;
use crate::problems::Objective;
use crate::Vector;

struct History {
    x: Vector,
    g: Vector,
}

/// AdGD (Malitsky & Mishchenko, adaptive proximal gradient, Algorithm 1):
/// `λ_k = min{ √(2/3 + θ_{k-1}) λ_{k-1}, λ_{k-1} / √[2λ_{k-1}²L_k² − 1]_+ }`,
/// `θ_k = λ_k/λ_{k-1}`, `θ_0 = 1/3`.
pub struct AdGd {
    lambda: f64,
    theta: f64,
    prev: Option<History>,
}

impl AdGd {
    pub fn new(lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.0) {
            return Err(invalid(format!("initial stepsize must be positive, got {lambda0}")));
        }
        Ok(Self {
            lambda: lambda0,
            theta: 1.0 / 3.0,
            prev: None,
        })
    }
}

impl StepPolicy for AdGd {
    fn next_step(&mut self, _obj: &dyn Objective, x: &Vector, grad: &Vector, _k: usize) -> Result<StepDecision> {
        if let Some(prev) = &self.prev {
            let l = secant_l(&prev.x, x, &prev.g, grad).unwrap_or(0.0);
            let growth = (2.0 / 3.0 + self.theta).sqrt() * self.lambda;
            let denom = 2.0 * self.lambda * self.lambda * l * l - 1.0;
            let curvature = if denom > 0.0 { self.lambda / denom.sqrt() } else { f64::INFINITY };
            let next = growth.min(curvature);
            self.theta = next / self.lambda;
            self.lambda = next;
        }
        self.prev = Some(History { x: x.clone(), g: grad.clone() });
        Ok(StepDecision::plain(self.lambda))
    }
}

/// adaPG^{q,r} (Latafat, Themelis, Stella & Patrinos) specialised to the
/// smooth case, with the default `(q, r) = (3/2, 3/4)`:
/// `γ_{k+1} = γ_k min{ √(1/q + γ_k/γ_{k-1}), √((1 − r/q) / [γ_k²L_k² + 2γ_kℓ_k(r−1) − (2r−1)]_+) }`.
pub struct AdaPgm {
    step: f64,
    step_prev: f64,
    q: f64,
    r: f64,
    prev: Option<History>,
}

impl AdaPgm {
    pub fn new(step0: f64) -> Result<Self> {
        if !(step0 > 0.0) {
            return Err(invalid(format!("initial stepsize must be positive, got {step0}")));
        }
        Ok(Self {
            step: step0,
            step_prev: step0,
            q: 1.5,
            r: 0.75,
            prev: None,
        })
    }
}

impl StepPolicy for AdaPgm {
    fn next_step(&mut self, _obj: &dyn Objective, x: &Vector, grad: &Vector, _k: usize) -> Result<StepDecision> {
        if let Some(prev) = &self.prev {
            let dx = x - &prev.x;
            let dg = grad - &prev.g;
            let dx2 = dx.norm_squared();
            let (l, ell) = if dx2 > 0.0 {
                (dg.norm() / dx2.sqrt(), dg.dot(&dx) / dx2)
            } else {
                (0.0, 0.0)
            };
            let s = self.step;
            let growth = (1.0 / self.q + s / self.step_prev).sqrt();
            let denom = s * s * l * l + 2.0 * s * ell * (self.r - 1.0) - (2.0 * self.r - 1.0);
            let curvature = if denom > 0.0 {
                ((1.0 - self.r / self.q) / denom).sqrt()
            } else {
                f64::INFINITY
            };
            self.step_prev = s;
            self.step = s * growth.min(curvature);
        }
        self.prev = Some(History { x: x.clone(), g: grad.clone() });
        Ok(StepDecision::plain(self.step))
    }
}
