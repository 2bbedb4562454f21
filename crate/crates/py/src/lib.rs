//! Python bindings: build problems and controllers, run descent, check
//! certificates.

use affgd_core::certify::{run_suite, CertReport, Suite, Tolerance};
use affgd_core::controllers::{ControllerSpec, GammaSchedule, DEFAULT_BLS_CAP, DEFAULT_HORIZON_SCALE};
use affgd_core::engine::{self, PerturbationSpec, ProblemSpec, RunConfig};
use affgd_core::geometry::{self, LinesearchOptions};
use affgd_core::{Error, Vector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::InvalidUsage(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn vector(x: Vec<f64>) -> Vector {
    Vector::from_vec(x)
}

/// A seeded objective together with its reference minimum.
#[pyclass(frozen, module = "affgd")]
struct Problem {
    inner: engine::Problem,
}

#[pymethods]
impl Problem {
    /// Logistic regression on a seeded two-cluster dataset with flipped labels.
    #[staticmethod]
    #[pyo3(signature = (n_samples=50, n_features=2, flip_fraction=0.2, seed=42))]
    fn logistic(n_samples: usize, n_features: usize, flip_fraction: f64, seed: u64) -> PyResult<Self> {
        let spec = ProblemSpec::Logistic { n_samples, n_features, flip_fraction };
        Ok(Self { inner: spec.instantiate(seed).map_err(to_py)? })
    }

    /// `½xᵀMx + bᵀx` with a dense symmetric positive semidefinite `M`.
    #[staticmethod]
    fn quadratic(matrix: Vec<Vec<f64>>, linear: Vec<f64>) -> PyResult<Self> {
        let spec = ProblemSpec::Quadratic { matrix, linear };
        Ok(Self { inner: spec.instantiate(0).map_err(to_py)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.objective.dim()
    }

    #[getter]
    fn smoothness_constant(&self) -> Option<f64> {
        self.inner.objective.smoothness_constant()
    }

    /// `(x*, f*)`, or `None` when no minimiser was found.
    #[getter]
    fn optimum(&self) -> Option<(Vec<f64>, f64)> {
        self.inner.optimum.as_ref().map(|o| (o.x.clone(), o.f))
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        let x = vector(x);
        self.inner.objective.check_point(&x).map_err(to_py)?;
        Ok(self.inner.objective.value(&x))
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = vector(x);
        self.inner.objective.check_point(&x).map_err(to_py)?;
        Ok(self.inner.objective.gradient(&x).as_slice().to_vec())
    }

    /// Two-point estimate `‖∇f(y) − ∇f(x)‖ / ‖y − x‖`.
    fn local_l(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        geometry::local_l(self.inner.objective.as_ref(), &vector(x), &vector(y)).map_err(to_py)
    }

    /// Largest backtracked `α ≤ cap` with `α·L(x − α∇f(x), x) ≤ γ`.
    fn solve_alpha1(&self, x: Vec<f64>, gamma: f64, cap: f64) -> PyResult<f64> {
        let obj = self.inner.objective.as_ref();
        let x = vector(x);
        obj.check_point(&x).map_err(to_py)?;
        let g = obj.gradient(&x);
        geometry::solve_alpha1(obj, &x, &g, gamma, cap, &LinesearchOptions::default())
            .map(|r| r.accepted_alpha)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?}, seed={})", self.inner.spec, self.inner.seed)
    }
}

/// Stepsize rule.
#[pyclass(frozen, module = "affgd")]
struct Controller {
    spec: ControllerSpec,
}

#[pymethods]
impl Controller {
    #[staticmethod]
    #[pyo3(signature = (gamma=0.7, alpha_init=1e-3, slack=None))]
    fn affgd(gamma: f64, alpha_init: f64, slack: Option<f64>) -> PyResult<Self> {
        let schedule = GammaSchedule::constant(gamma).map_err(to_py)?;
        Ok(Self { spec: ControllerSpec::Affgd { schedule, alpha_init, slack } })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma0=0.95, theta=0.9, alpha_init=1e-3))]
    fn affgd_adaptive(gamma0: f64, theta: f64, alpha_init: f64) -> PyResult<Self> {
        let schedule = GammaSchedule::adaptive(gamma0, theta).map_err(to_py)?;
        Ok(Self { spec: ControllerSpec::Affgd { schedule, alpha_init, slack: None } })
    }

    /// Constant step `scale / L_s`.
    #[staticmethod]
    #[pyo3(signature = (scale=1.0))]
    fn gd(scale: f64) -> Self {
        Self { spec: ControllerSpec::Constant { scale } }
    }

    /// Increasing open-loop ramp towards `2/L_s`.
    #[staticmethod]
    #[pyo3(signature = (horizon_scale=DEFAULT_HORIZON_SCALE, scale=1.0))]
    fn tv(horizon_scale: f64, scale: f64) -> Self {
        Self { spec: ControllerSpec::OpenLoop { horizon_scale, scale } }
    }

    #[staticmethod]
    #[pyo3(signature = (gamma=0.7, cap=DEFAULT_BLS_CAP))]
    fn bls(gamma: f64, cap: f64) -> Self {
        Self { spec: ControllerSpec::Bls { gamma, cap } }
    }

    #[staticmethod]
    #[pyo3(signature = (gamma=0.8, slack=0.4, alpha_init=1e-3))]
    fn capped(gamma: f64, slack: f64, alpha_init: f64) -> Self {
        Self { spec: ControllerSpec::GrowthCapped { gamma, slack, alpha_init } }
    }

    #[staticmethod]
    #[pyo3(signature = (lo=0.05, hi=1.95))]
    fn random(lo: f64, hi: f64) -> Self {
        Self { spec: ControllerSpec::Random { lo, hi } }
    }

    #[staticmethod]
    #[pyo3(signature = (alpha_init=1e-3))]
    fn adgd(alpha_init: f64) -> Self {
        Self { spec: ControllerSpec::Adgd { alpha_init } }
    }

    #[staticmethod]
    #[pyo3(signature = (alpha_init=1e-3))]
    fn adagm(alpha_init: f64) -> Self {
        Self { spec: ControllerSpec::Adagm { alpha_init } }
    }

    #[getter]
    fn label(&self) -> String {
        self.spec.label()
    }

    fn __repr__(&self) -> String {
        format!("Controller({})", self.spec.label())
    }
}

/// Recorded run.
#[pyclass(frozen, module = "affgd")]
struct Trajectory {
    inner: engine::Trajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn label(&self) -> &str {
        &self.inner.label
    }

    #[getter]
    fn status(&self) -> &'static str {
        self.inner.status.as_str()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    #[getter]
    fn final_gap(&self) -> Option<f64> {
        self.inner.final_gap()
    }

    #[getter]
    fn error(&self) -> Option<String> {
        self.inner.error.clone()
    }

    #[getter]
    fn k(&self) -> Vec<usize> {
        self.inner.records.iter().map(|r| r.k).collect()
    }

    #[getter]
    fn f(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.f).collect()
    }

    #[getter]
    fn gaps(&self) -> Vec<Option<f64>> {
        self.inner.records.iter().map(|r| r.gap).collect()
    }

    #[getter]
    fn grad_norms(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.grad_norm).collect()
    }

    /// Stepsize taken at each record (`None` at the terminal record).
    #[getter]
    fn alphas(&self) -> Vec<Option<f64>> {
        self.inner.records.iter().map(|r| r.alpha()).collect()
    }

    #[getter]
    fn gammas(&self) -> Vec<Option<f64>> {
        self.inner.records.iter().map(|r| r.step.and_then(|s| s.gamma)).collect()
    }

    #[getter]
    fn active_bounds(&self) -> Vec<Option<&'static str>> {
        self.inner
            .records
            .iter()
            .map(|r| r.step.and_then(|s| s.active).map(|a| a.as_str()))
            .collect()
    }

    fn first_k_below(&self, threshold: f64) -> Option<usize> {
        self.inner.first_k_below(threshold)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn save_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        affgd_core::io::save_csv(&path, |w| affgd_core::io::write_trajectory_csv(&self.inner, w)).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(label={:?}, status={}, iterations={})",
            self.inner.label,
            self.inner.status.as_str(),
            self.inner.iterations()
        )
    }
}

/// Runs gradient descent on `problem` with the given stepsize rule.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (problem, controller, max_iters=100_000, grad_tol=1e-10, delta=0.0, record_every=1, x0=None))]
fn run(
    py: Python<'_>,
    problem: &Problem,
    controller: &Controller,
    max_iters: usize,
    grad_tol: f64,
    delta: f64,
    record_every: usize,
    x0: Option<Vec<f64>>,
) -> PyResult<Trajectory> {
    let p = &problem.inner;
    let config = RunConfig {
        problem: p.spec.clone(),
        controller: controller.spec.clone(),
        max_iters,
        grad_tol,
        seed: p.seed,
        perturbation: PerturbationSpec { delta },
        record_every,
        x0,
        record_iterates: None,
    };
    py.detach(|| engine::run_on(p, &config))
        .map(|inner| Trajectory { inner })
        .map_err(to_py)
}

fn report_dict<'py>(py: Python<'py>, suite: Suite, r: &CertReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("suite", suite.as_str())?;
    d.set_item("inequality", &r.name)?;
    d.set_item("iters_checked", r.iters_checked)?;
    d.set_item("iters_skipped", r.iters_skipped)?;
    d.set_item("max_residual", r.max_residual)?;
    d.set_item("tolerance", r.tolerance)?;
    d.set_item("violations", r.violations)?;
    d.set_item("worst_iteration", r.worst_iteration)?;
    d.set_item("verdict", r.verdict.as_str())?;
    d.set_item("notes", r.notes.clone())?;
    Ok(d)
}

/// Checks the certificate suite (`lemma1`, `thm1`, `thm2`, `lemma4` or `all`)
/// along a trajectory; returns one dict per inequality.
#[pyfunction]
#[pyo3(signature = (problem, trajectory, suite="all", tol_abs=1e-10, tol_rel=1e-9))]
fn verify<'py>(
    py: Python<'py>,
    problem: &Problem,
    trajectory: &Trajectory,
    suite: &str,
    tol_abs: f64,
    tol_rel: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let suites = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(suite).ok_or_else(|| PyValueError::new_err(format!("unknown suite '{suite}'")))?]
    };
    let optimum = problem
        .inner
        .optimum
        .as_ref()
        .ok_or_else(|| PyValueError::new_err("problem has no reference minimum"))?;
    let tol = Tolerance { abs: tol_abs, rel: tol_rel };
    let mut out = Vec::new();
    for s in suites {
        let reports = run_suite(s, &trajectory.inner, problem.inner.objective.as_ref(), optimum, tol).map_err(to_py)?;
        for r in &reports {
            out.push(report_dict(py, s, r)?);
        }
    }
    Ok(out)
}

#[pymodule]
fn affgd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Controller>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
