//! The gradient descent recursion, run configuration and trajectory recording.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controllers::{ActiveBound, ControllerSpec, StepDecision, StepPolicy};
use crate::error::{invalid, Error, Result};
use crate::geometry::secant_l;
use crate::problems::{
    make_logistic_dataset, quadratic_objective, reference_minimum, LogisticObjective, Objective,
    Optimum, DEFAULT_FLIP_FRACTION, REFERENCE_GRAD_TOL,
};
use crate::{Matrix, Vector};

pub const DEFAULT_GRAD_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;
pub const DIVERGENCE_NORM: f64 = 1e12;
/// Iterates are stored in trajectories up to this dimension unless overridden.
pub const ITERATE_RECORD_MAX_DIM: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Multiplicative error on the applied step: `x − (1+δ)α∇f(x)`.
    pub delta: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: DEFAULT_GRAD_TOL,
            delta: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    GradTolReached,
    BudgetExhausted,
    Diverged,
    /// The controller returned an error; the trajectory is partial.
    Aborted,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::GradTolReached => "grad_tol_reached",
            RunStatus::BudgetExhausted => "budget_exhausted",
            RunStatus::Diverged => "diverged",
            RunStatus::Aborted => "aborted",
        }
    }
}

/// Emitted once per visited iterate. `step` is `None` for the terminal iterate.
pub struct IterEvent<'a> {
    pub k: usize,
    pub x: &'a Vector,
    pub f: f64,
    pub grad_norm: f64,
    pub step: Option<(StepDecision, Option<f64>)>,
}

#[derive(Clone, Debug)]
pub struct DescentOutcome {
    pub x: Vector,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: RunStatus,
}

fn diverged(x: &Vector, f: f64) -> bool {
    !f.is_finite() || x.iter().any(|v| !v.is_finite()) || x.norm() > DIVERGENCE_NORM
}

/// Runs `x_{k+1} = x_k − (1+δ)α_k∇f(x_k)` and reports every iterate to `on_iter`.
///
/// On a controller error the current iterate is reported as terminal and the
/// error is returned.
pub fn descend(
    obj: &dyn Objective,
    x0: &Vector,
    policy: &mut dyn StepPolicy,
    opts: &DescentOptions,
    mut on_iter: impl FnMut(&IterEvent<'_>),
) -> Result<DescentOutcome> {
    obj.check_point(x0)?;
    if !(opts.delta >= 0.0) {
        return Err(invalid(format!("delta must be nonnegative, got {}", opts.delta)));
    }
    let mut x = x0.clone();
    let mut f = obj.value(&x);
    let mut g = obj.gradient(&x);
    let mut k = 0usize;
    loop {
        let gn = g.norm();
        let terminal = |status| DescentOutcome { x: x.clone(), grad_norm: gn, iterations: k, status };
        if diverged(&x, f) {
            on_iter(&IterEvent { k, x: &x, f, grad_norm: gn, step: None });
            return Ok(terminal(RunStatus::Diverged));
        }
        if gn <= opts.grad_tol {
            on_iter(&IterEvent { k, x: &x, f, grad_norm: gn, step: None });
            return Ok(terminal(RunStatus::GradTolReached));
        }
        if k >= opts.max_iters {
            on_iter(&IterEvent { k, x: &x, f, grad_norm: gn, step: None });
            return Ok(terminal(RunStatus::BudgetExhausted));
        }
        let decision = policy
            .next_step(obj, &x, &g, k)
            .and_then(|d| {
                if d.alpha > 0.0 && d.alpha.is_finite() {
                    Ok(d)
                } else {
                    Err(invalid(format!("controller emitted stepsize {}", d.alpha)))
                }
            });
        let decision = match decision {
            Ok(d) => d,
            Err(e) => {
                on_iter(&IterEvent { k, x: &x, f, grad_norm: gn, step: None });
                return Err(e);
            }
        };
        let x_next = &x - ((1.0 + opts.delta) * decision.alpha) * &g;
        let g_next = obj.gradient(&x_next);
        let l = secant_l(&x, &x_next, &g, &g_next);
        on_iter(&IterEvent { k, x: &x, f, grad_norm: gn, step: Some((decision, l)) });
        f = obj.value(&x_next);
        x = x_next;
        g = g_next;
        k += 1;
    }
}

/// Objective selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    /// Seeded logistic regression (dataset drawn from the run seed).
    Logistic {
        n_samples: usize,
        n_features: usize,
        flip_fraction: f64,
    },
    /// `½xᵀMx + bᵀx`, `M` given row-major.
    Quadratic { matrix: Vec<Vec<f64>>, linear: Vec<f64> },
}

impl ProblemSpec {
    /// The `N = 50, n = 2` logistic benchmark.
    pub fn logistic_default() -> Self {
        Self::Logistic {
            n_samples: 50,
            n_features: 2,
            flip_fraction: DEFAULT_FLIP_FRACTION,
        }
    }

    pub fn diagonal_quadratic(diag: &[f64], linear: &[f64]) -> Self {
        let n = diag.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        Self::Quadratic { matrix, linear: linear.to_vec() }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Logistic { n_features, .. } => *n_features,
            Self::Quadratic { linear, .. } => linear.len(),
        }
    }

    pub fn build_objective(&self, seed: u64) -> Result<Arc<dyn Objective>> {
        Ok(match self {
            Self::Logistic { n_samples, n_features, flip_fraction } => {
                let data = make_logistic_dataset(*n_samples, *n_features, seed, *flip_fraction)?;
                Arc::new(LogisticObjective::new(data)?)
            }
            Self::Quadratic { matrix, linear } => {
                let n = linear.len();
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(invalid("quadratic matrix must be n×n with n = len(linear)"));
                }
                let m = Matrix::from_fn(n, n, |i, j| matrix[i][j]);
                Arc::new(quadratic_objective(m, Vector::from_vec(linear.clone()))?)
            }
        })
    }

    pub fn instantiate(&self, seed: u64) -> Result<Problem> {
        let objective = self.build_objective(seed)?;
        let optimum = match reference_minimum(objective.as_ref(), REFERENCE_GRAD_TOL) {
            Ok(opt) => Some(opt),
            Err(Error::Convergence { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Problem {
            spec: self.clone(),
            seed,
            objective,
            optimum,
        })
    }
}

/// A built objective with its reference optimum; shared read-only across runs.
#[derive(Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub seed: u64,
    pub objective: Arc<dyn Objective>,
    pub optimum: Option<Optimum>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub controller: ControllerSpec,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub perturbation: PerturbationSpec,
    pub record_every: usize,
    /// Starting point; the origin when absent.
    pub x0: Option<Vec<f64>>,
    /// Store iterates in the trajectory; defaults to `dim ≤ 1000`.
    pub record_iterates: Option<bool>,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, controller: ControllerSpec) -> Self {
        Self {
            problem,
            controller,
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: DEFAULT_GRAD_TOL,
            seed: 42,
            perturbation: PerturbationSpec::default(),
            record_every: 1,
            x0: None,
            record_iterates: None,
        }
    }

    pub fn with_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.perturbation.delta = delta;
        self
    }

    pub fn with_grad_tol(mut self, grad_tol: f64) -> Self {
        self.grad_tol = grad_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(invalid(format!("grad_tol must be nonnegative, got {}", self.grad_tol)));
        }
        if self.record_every < 1 {
            return Err(invalid("record_every must be at least 1"));
        }
        if !(self.perturbation.delta >= 0.0) {
            return Err(invalid(format!("delta must be nonnegative, got {}", self.perturbation.delta)));
        }
        if let Some(x0) = &self.x0 {
            crate::error::check_dim(self.problem.dim(), x0.len())?;
        }
        Ok(())
    }

    fn start(&self) -> Vector {
        match &self.x0 {
            Some(x0) => Vector::from_vec(x0.clone()),
            None => Vector::zeros(self.problem.dim()),
        }
    }
}

/// Bookkeeping of one GD step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub alpha2: Option<f64>,
    pub active: Option<ActiveBound>,
    pub slack: Option<f64>,
    /// `L(x_{k+1}, x_k)` along the step actually taken.
    pub local_l: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub x: Option<Vec<f64>>,
    pub f: f64,
    pub gap: Option<f64>,
    pub grad_norm: f64,
    /// `Σ_{i<k} α_i`.
    pub cum_alpha: f64,
    pub step: Option<StepRecord>,
}

impl IterRecord {
    pub fn alpha(&self) -> Option<f64> {
        self.step.map(|s| s.alpha)
    }

    pub fn point(&self) -> Option<Vector> {
        self.x.as_ref().map(|x| Vector::from_vec(x.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub label: String,
    pub config: RunConfig,
    /// `(α_{-1}, γ_{-1})` of laws that carry them.
    pub initial_state: Option<(f64, f64)>,
    pub f_star: Option<f64>,
    pub records: Vec<IterRecord>,
    pub status: RunStatus,
    pub error: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trajectory has at least one record")
    }

    pub fn iterations(&self) -> usize {
        self.last().k
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.last().gap
    }

    /// Every iterate from 0 to the last is present.
    pub fn is_dense(&self) -> bool {
        self.records.iter().enumerate().all(|(i, r)| r.k == i)
    }

    /// First recorded iteration with gap at or below `threshold`.
    pub fn first_k_below(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.gap.is_some_and(|g| g <= threshold))
            .map(|r| r.k)
    }

    pub fn delta(&self) -> f64 {
        self.config.perturbation.delta
    }
}

/// Builds the problem from `config` and runs it.
pub fn run_gd(config: &RunConfig) -> Result<Trajectory> {
    config.validate()?;
    let problem = config.problem.instantiate(config.seed)?;
    run_on(&problem, config)
}

/// Runs `config` on an already built problem. Controller failures end the run
/// with status [`RunStatus::Aborted`] and keep the partial trajectory.
pub fn run_on(problem: &Problem, config: &RunConfig) -> Result<Trajectory> {
    config.validate()?;
    if problem.spec != config.problem || problem.seed != config.seed {
        return Err(invalid("run configuration does not match the problem instance"));
    }
    let obj = problem.objective.as_ref();
    let mut policy = config.controller.build(obj, config.seed)?;
    let f_star = problem.optimum.as_ref().map(|o| o.f);
    let keep_x = config
        .record_iterates
        .unwrap_or(config.problem.dim() <= ITERATE_RECORD_MAX_DIM);
    let opts = DescentOptions {
        max_iters: config.max_iters,
        grad_tol: config.grad_tol,
        delta: config.perturbation.delta,
    };

    let mut records = Vec::new();
    let mut cum_alpha = 0.0;
    let result = descend(obj, &config.start(), policy.as_mut(), &opts, |ev| {
        let step = ev.step.map(|(d, l)| StepRecord {
            alpha: d.alpha,
            gamma: d.gamma,
            alpha2: d.alpha2,
            active: d.active,
            slack: d.slack,
            local_l: l,
        });
        if ev.k % config.record_every == 0 || step.is_none() {
            records.push(IterRecord {
                k: ev.k,
                x: keep_x.then(|| ev.x.as_slice().to_vec()),
                f: ev.f,
                gap: f_star.map(|fs| ev.f - fs),
                grad_norm: ev.grad_norm,
                cum_alpha,
                step,
            });
        }
        if let Some(s) = step {
            cum_alpha += s.alpha;
        }
    });
    let (status, error) = match result {
        Ok(outcome) => (outcome.status, None),
        Err(e) => (RunStatus::Aborted, Some(e.to_string())),
    };
    Ok(Trajectory {
        label: config.controller.label(),
        config: config.clone(),
        initial_state: policy.initial_state(),
        f_star,
        records,
        status,
        error,
    })
}

/// Runs several configurations on one shared problem instance, concurrently.
/// Output order matches input order.
pub fn compare_runs(configs: &[RunConfig]) -> Result<Vec<Trajectory>> {
    let Some(first) = configs.first() else {
        return Ok(Vec::new());
    };
    for c in configs {
        c.validate()?;
        if c.problem != first.problem || c.seed != first.seed || c.x0 != first.x0 {
            return Err(invalid("compared runs must share problem, seed and starting point"));
        }
    }
    let problem = first.problem.instantiate(first.seed)?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                let problem = &problem;
                scope.spawn(move || run_on(problem, c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}
