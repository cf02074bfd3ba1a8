//! Python module `stargraph_py`.
//!
//! Complex numbers cross as Python `complex`; structured results (resonance
//! reports, studies, panel rows) come back as plain dicts via JSON.

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stargraph::source::SourcePiece;

fn err(e: stargraph::Error) -> PyErr {
    match e {
        stargraph::Error::InvalidInput(_) | stargraph::Error::Json(_) => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen, skip_from_py_object, module = "stargraph_py")]
#[derive(Clone)]
pub struct PotentialProfile(stargraph::PotentialProfile);

#[pymethods]
impl PotentialProfile {
    /// `{"edges": [[{"interval": [a, b], "coeffs": [...]}, ...], ...]}`
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        stargraph::PotentialProfile::from_json(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn constant(edge_count: usize, value: f64) -> Self {
        Self(stargraph::PotentialProfile::constant(edge_count, value))
    }

    #[staticmethod]
    fn zero(edge_count: usize) -> Self {
        Self(stargraph::PotentialProfile::zero(edge_count))
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        format!("PotentialProfile({})", self.0.to_json())
    }
}

#[pyclass(frozen, skip_from_py_object, module = "stargraph_py")]
#[derive(Clone)]
pub struct VertexCondition(stargraph::VertexCondition);

#[pymethods]
impl VertexCondition {
    #[staticmethod]
    fn dirichlet() -> Self {
        Self(stargraph::VertexCondition::Dirichlet)
    }

    #[staticmethod]
    fn kirchhoff() -> Self {
        Self(stargraph::VertexCondition::Kirchhoff)
    }

    #[staticmethod]
    fn weighted_continuity(theta: Vec<f64>) -> Self {
        Self(stargraph::VertexCondition::WeightedContinuity(theta))
    }

    #[staticmethod]
    fn weighted_derivative(theta: Vec<f64>) -> Self {
        Self(stargraph::VertexCondition::WeightedDerivative(theta))
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    #[getter]
    fn theta(&self) -> Option<Vec<f64>> {
        self.0.theta().map(<[f64]>::to_vec)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        match self.0.theta() {
            Some(t) => format!("VertexCondition.{}({t:?})", self.0.name()),
            None => format!("VertexCondition.{}()", self.0.name()),
        }
    }
}

#[pyclass(frozen, skip_from_py_object, module = "stargraph_py")]
#[derive(Clone)]
pub struct Source(stargraph::Source);

#[pymethods]
impl Source {
    /// One list per edge of `(t0, t1, coeffs)` with coefficients in `t - t0`.
    #[new]
    fn new(edges: Vec<Vec<(f64, f64, Vec<C64>)>>) -> PyResult<Self> {
        let edges = edges
            .into_iter()
            .map(|e| e.into_iter().map(|(t0, t1, coeffs)| SourcePiece { t0, t1, coeffs }).collect())
            .collect();
        stargraph::Source::new(edges).map(Self).map_err(err)
    }

    /// Unit-norm random piecewise polynomial source.
    #[staticmethod]
    #[pyo3(signature = (seed, edge_count=3, radius=4.0, panels=8, degree=3))]
    fn random(seed: u64, edge_count: usize, radius: f64, panels: usize, degree: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        stargraph::Source::random(&mut rng, edge_count, radius, panels, degree).map(Self).map_err(err)
    }

    fn __call__(&self, edge: usize, t: f64) -> PyResult<C64> {
        if edge >= self.0.edge_count() {
            return Err(PyValueError::new_err(format!("edge {edge} out of range")));
        }
        Ok(self.0.eval(edge, t))
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }
}

/// A resolvent image `R(ζ) f`.
#[pyclass(frozen, module = "stargraph_py")]
pub struct GraphFunction(stargraph::GraphFunction);

#[pymethods]
impl GraphFunction {
    /// `(y_n(t), y_n'(t))`
    fn __call__(&self, edge: usize, t: f64) -> PyResult<(C64, C64)> {
        if edge >= self.0.edge_count() {
            return Err(PyValueError::new_err(format!("edge {edge} out of range")));
        }
        Ok(self.0.eval(edge, t))
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    fn l2_norm(&self) -> PyResult<f64> {
        self.0.l2_norm().map_err(err)
    }

    /// `‖y‖`, `‖y'‖`, `‖y''‖` and the Sobolev norms as a dict.
    fn norms<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &stargraph::norms(&self.0).map_err(err)?)
    }

    fn vertex_residual(&self, cond: &VertexCondition) -> f64 {
        stargraph::vertex_residual(&self.0, &cond.0)
    }
}

fn matrix(s: &stargraph::scattering::ScatteringMatrix) -> Vec<Vec<C64>> {
    let n = s.edge_count();
    (0..n).map(|i| (0..n).map(|j| s.s[(i, j)]).collect()).collect()
}

/// Resonant couplings in `[lo, hi]` as a list of dicts.
#[pyfunction]
#[pyo3(signature = (q, lo, hi, scan_step=stargraph::resonance::DEFAULT_SCAN_STEP, rank_tol=stargraph::resonance::DEFAULT_RANK_TOL))]
fn find_resonances<'py>(py: Python<'py>, q: &PotentialProfile, lo: f64, hi: f64, scan_step: f64, rank_tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let found = py.detach(|| stargraph::resonance::find_resonances(&q.0, lo, hi, scan_step, rank_tol)).map_err(err)?;
    to_py(py, &found)
}

/// `(limit condition, kernel dimension)` for coupling `alpha`.
#[pyfunction]
#[pyo3(signature = (alpha, q, rank_tol=stargraph::resonance::DEFAULT_RANK_TOL))]
fn classify(alpha: f64, q: &PotentialProfile, rank_tol: f64) -> PyResult<(VertexCondition, usize)> {
    let c = stargraph::resonance::classify(alpha, &q.0, rank_tol).map_err(err)?;
    Ok((VertexCondition(c.condition), c.multiplicity))
}

#[pyfunction]
fn scattering_eps(q: &PotentialProfile, alpha: f64, eps: f64, k: f64) -> PyResult<Vec<Vec<C64>>> {
    stargraph::scattering::scattering_eps(&q.0, alpha, eps, k).map(|s| matrix(&s)).map_err(err)
}

#[pyfunction]
fn scattering_limit(cond: &VertexCondition, edge_count: usize, k: f64) -> PyResult<Vec<Vec<C64>>> {
    stargraph::scattering::scattering_limit(&cond.0, edge_count, k).map(|s| matrix(&s)).map_err(err)
}

/// `‖S_ε(k) - S_lim(k)‖₂`
#[pyfunction]
fn scattering_gap(q: &PotentialProfile, alpha: f64, eps: f64, k: f64, cond: &VertexCondition) -> PyResult<f64> {
    stargraph::scattering::scattering_gap(&q.0, alpha, eps, k, &cond.0).map_err(err)
}

#[pyfunction]
fn resolvent_limit(py: Python<'_>, cond: &VertexCondition, zeta: C64, f: &Source) -> PyResult<GraphFunction> {
    py.detach(|| stargraph::resolvent::resolvent_limit(&cond.0, zeta, &f.0))
        .map(GraphFunction)
        .map_err(err)
}

#[pyfunction]
fn resolvent_eps(py: Python<'_>, q: &PotentialProfile, alpha: f64, eps: f64, zeta: C64, f: &Source) -> PyResult<GraphFunction> {
    py.detach(|| stargraph::resolvent::resolvent_eps(&q.0, alpha, eps, zeta, &f.0))
        .map(GraphFunction)
        .map_err(err)
}

/// Convergence study from a JSON config (same schema as the `converge`
/// subcommand); returns the study as a dict.
#[pyfunction]
fn run_study<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg: stargraph::convergence::StudyConfig =
        serde_json::from_str(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let study = py.detach(|| stargraph::convergence::run_study(&cfg)).map_err(err)?;
    to_py(py, &study)
}

/// Panel maxima of the approximation ratios per `ε` for `size` random
/// sources with a vertex layer of width `ε`.
#[pyfunction]
#[pyo3(signature = (q, alpha, cond, eps_list, seed=0, size=20, zeta=C64::new(0.0, 1.0)))]
#[allow(clippy::too_many_arguments)]
fn approximation_panel<'py>(
    py: Python<'py>,
    q: &PotentialProfile,
    alpha: f64,
    cond: &VertexCondition,
    eps_list: Vec<f64>,
    seed: u64,
    size: usize,
    zeta: C64,
) -> PyResult<Bound<'py, PyAny>> {
    let n = q.0.edge_count();
    let rows = py
        .detach(|| {
            stargraph::approximation::verify_bounds(
                &q.0,
                alpha,
                &cond.0,
                &eps_list,
                |eps| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..size)
                        .map(|_| stargraph::Source::random_layered(&mut rng, n, 4.0, 8, 3, eps).expect("valid panel"))
                        .collect()
                },
                zeta,
                stargraph::resonance::DEFAULT_RANK_TOL,
            )
        })
        .map_err(err)?;
    to_py(py, &rows)
}

#[pymodule]
fn stargraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PotentialProfile>()?;
    m.add_class::<VertexCondition>()?;
    m.add_class::<Source>()?;
    m.add_class::<GraphFunction>()?;
    m.add_function(wrap_pyfunction!(find_resonances, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_eps, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_limit, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_gap, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_limit, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_eps, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(approximation_panel, m)?)?;
    Ok(())
}
