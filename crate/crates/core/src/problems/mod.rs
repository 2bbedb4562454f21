//! Test objectives and the oracles used to verify them.

mod logistic;
mod quadratic;

pub use logistic::{
    is_linearly_separable, logistic_gradient, logistic_smoothness, logistic_value,
    make_logistic_dataset, LogisticDataset, LogisticObjective, DEFAULT_FLIP_FRACTION,
};
pub use quadratic::{quadratic_objective, Quadratic};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controllers::{Affgd, GammaSchedule, StepPolicy};
use crate::engine::{descend, DescentOptions};
use crate::error::{check_dim, invalid, Error, Result};
use crate::{Matrix, Vector};

/// A differentiable convex objective on `R^n`.
///
/// `value` and `gradient` assume `x.len() == dim()`; callers validate the
/// dimension once at the boundary (see [`Objective::check_point`]).
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;

    /// Global Lipschitz constant of the gradient, when known.
    fn smoothness_constant(&self) -> Option<f64> {
        None
    }

    /// Constant Hessian of a quadratic objective.
    fn hessian(&self) -> Option<&Matrix> {
        None
    }

    /// Linear term `b` of a quadratic `½xᵀMx + bᵀx`.
    fn linear_term(&self) -> Option<&Vector> {
        None
    }

    fn check_point(&self, x: &Vector) -> Result<()> {
        check_dim(self.dim(), x.len())
    }
}

/// Minimiser and optimal value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub f: f64,
}

impl Optimum {
    pub fn point(&self) -> Vector {
        Vector::from_vec(self.x.clone())
    }
}

type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// Objective assembled from closures.
#[derive(Clone)]
pub struct FnObjective {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    smoothness: Option<f64>,
}

impl FnObjective {
    pub fn new<V, G>(dim: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&Vector) -> f64 + Send + Sync + 'static,
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            smoothness: None,
        }
    }

    pub fn with_smoothness(mut self, l_s: f64) -> Self {
        self.smoothness = Some(l_s);
        self
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }
    fn smoothness_constant(&self) -> Option<f64> {
        self.smoothness
    }
}

/// Central finite differences, one coordinate at a time.
pub fn finite_diff_gradient(obj: &dyn Objective, x: &Vector, h: f64) -> Result<Vector> {
    obj.check_point(x)?;
    if !(h > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let mut grad = Vector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let up = obj.value(&probe);
        probe[i] = xi - h;
        let down = obj.value(&probe);
        probe[i] = xi;
        grad[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

pub const REFERENCE_GRAD_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

/// High-accuracy minimiser used as `x*`, `f*` by the certificates.
///
/// Quadratics whose linear term lies in the range of `M` are solved directly;
/// everything else is minimised by AFFGD with adaptive γ until
/// `‖∇f‖ ≤ grad_tol`.
pub fn reference_minimum(obj: &dyn Objective, grad_tol: f64) -> Result<Optimum> {
    if let (Some(m), Some(b)) = (obj.hessian(), obj.linear_term()) {
        if let Some(x) = quadratic::solve_stationary(m, b) {
            let g = obj.gradient(&x);
            if g.norm() <= grad_tol.max(1e-14 * (1.0 + b.norm())) {
                let f = obj.value(&x);
                return Ok(Optimum { x: x.as_slice().to_vec(), f });
            }
        }
    }
    let schedule = GammaSchedule::adaptive(0.95, 0.9)?;
    let mut policy = Affgd::new(schedule, 1e-3)?;
    reference_minimum_with(obj, grad_tol, &mut policy)
}

/// Same as [`reference_minimum`] but with a caller-chosen stepsize policy,
/// always iterating (no closed-form shortcut).
pub fn reference_minimum_with(
    obj: &dyn Objective,
    grad_tol: f64,
    policy: &mut dyn StepPolicy,
) -> Result<Optimum> {
    let x0 = Vector::zeros(obj.dim());
    let opts = DescentOptions {
        max_iters: REFERENCE_MAX_ITERS,
        grad_tol,
        ..DescentOptions::default()
    };
    let outcome = descend(obj, &x0, policy, &opts, |_| {})?;
    if outcome.grad_norm <= grad_tol {
        Ok(Optimum {
            f: obj.value(&outcome.x),
            x: outcome.x.as_slice().to_vec(),
        })
    } else {
        Err(Error::Convergence {
            iterations: outcome.iterations,
            grad_norm: outcome.grad_norm,
            best: outcome.x,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::Bls;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finite_diff_on_identity_quadratic() {
        let q = quadratic_objective(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let g = finite_diff_gradient(&q, &Vector::from_vec(vec![1.0, 0.0]), 1e-6).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn finite_diff_of_constant_is_zero() {
        let c = FnObjective::new(3, |_| 7.5, |x| Vector::zeros(x.len()));
        let g = finite_diff_gradient(&c, &Vector::from_vec(vec![1.0, -2.0, 3.0]), 1e-4).unwrap();
        assert_eq!(g, Vector::zeros(3));
    }

    #[test]
    fn finite_diff_rejects_bad_inputs() {
        let c = FnObjective::new(2, |_| 0.0, |x| Vector::zeros(x.len()));
        assert!(matches!(
            finite_diff_gradient(&c, &Vector::zeros(3), 1e-6),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(finite_diff_gradient(&c, &Vector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn reference_minimum_closed_form_quadratics() {
        let q = quadratic_objective(Matrix::identity(2, 2), Vector::from_vec(vec![-1.0, -1.0]))
            .unwrap();
        let opt = reference_minimum(&q, 1e-12).unwrap();
        assert_abs_diff_eq!(opt.x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(opt.x[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(opt.f, -1.0, epsilon = 1e-14);

        let q = quadratic_objective(Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0])), Vector::zeros(2))
            .unwrap();
        let opt = reference_minimum(&q, 1e-12).unwrap();
        assert_eq!(opt.x, vec![0.0, 0.0]);
        assert_eq!(opt.f, 0.0);
    }

    #[test]
    fn reference_minimum_logistic_agrees_across_controllers() {
        let data = make_logistic_dataset(50, 2, 42, DEFAULT_FLIP_FRACTION).unwrap();
        let obj = LogisticObjective::new(data).unwrap();
        let a = reference_minimum(&obj, 1e-12).unwrap();
        assert!(obj.gradient(&a.point()).norm() <= 1e-12);

        let mut bls = Bls::new(0.5, crate::controllers::DEFAULT_BLS_CAP).unwrap();
        let b = reference_minimum_with(&obj, 1e-12, &mut bls).unwrap();
        assert!((a.f - b.f).abs() <= 1e-12, "{} vs {}", a.f, b.f);

        let again = reference_minimum(&obj, 1e-12).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn reference_minimum_reports_budget_failure() {
        let obj = FnObjective::new(
            1,
            |x| 0.5 * (x[0] - 1.0).powi(2),
            |x| Vector::from_element(1, x[0] - 1.0),
        );
        let mut policy = crate::controllers::ConstantStep::new(1e-9).unwrap();
        match reference_minimum_with(&obj, 1e-12, &mut policy) {
            Err(Error::Convergence { iterations, best, .. }) => {
                assert_eq!(iterations, REFERENCE_MAX_ITERS);
                assert!(best[0] > 0.0 && best[0] < 0.01);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
