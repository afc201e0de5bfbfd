//! Python bindings: models, exact oracles, the estimation pipeline, polynomial
//! fits, amplitude estimation and the experiment drivers.

use std::collections::BTreeMap;
use std::path::PathBuf;

use fidsus_core::amplitude::{qae_bound as core_qae_bound, AmplitudeEstimator};
use fidsus_core::experiments::{self, ExperimentConfig, ScalingSpec};
use fidsus_core::models::{self, Family};
use fidsus_core::polynomial::{self as poly, ChebyshevPolynomial, FitOptions};
use fidsus_core::susceptibility::{self as sus, EstimationReport, PipelineOptions};
use fidsus_core::Error;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(fidsus, FidsusError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parameter(_) => PyValueError::new_err(e.to_string()),
        _ => FidsusError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for fidsus_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn family(name: &str) -> PyResult<Family> {
    serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown family `{name}`")))
}

/// A model family at one coupling: `tfim`, `xxz` or `ff_projector_chain`.
#[pyclass(name = "Model", module = "fidsus", frozen)]
struct PyModel {
    spec: models::ModelSpec,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (family_name, n_qubits, lam = 0.0))]
    fn new(family_name: &str, n_qubits: usize, lam: f64) -> PyResult<Self> {
        let spec = models::ModelSpec::new(family(family_name)?, n_qubits, lam);
        spec.validate().py()?;
        Ok(Self { spec })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.spec.n_qubits
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.spec.lambda
    }

    fn with_lambda(&self, lam: f64) -> Self {
        Self { spec: self.spec.with_lambda(lam) }
    }

    /// Dense `H(lambda)` as nested lists of complex numbers.
    fn hamiltonian(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let (h, _) = models::build_dense(&self.spec).py()?;
        Ok(rows(h.matrix()))
    }

    fn driving(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let (_, hi) = models::build_dense(&self.spec).py()?;
        Ok(rows(hi.matrix()))
    }

    /// `(E0, gap)`.
    fn ground(&self) -> PyResult<(f64, f64)> {
        let (h, _) = models::build_dense(&self.spec).py()?;
        let (sd, _) = models::ground_data(&h).py()?;
        Ok((sd.e0, sd.gap))
    }

    fn chi_f_exact(&self) -> PyResult<f64> {
        let (h, hi) = models::build_dense(&self.spec).py()?;
        sus::chi_f_exact_sum(&h, &hi).py()
    }

    fn chi_f_resolvent(&self) -> PyResult<f64> {
        let (h, hi) = models::build_dense(&self.spec).py()?;
        sus::chi_f_exact_resolvent(&h, &hi).py()
    }

    #[pyo3(signature = (step = sus::FD_STEP))]
    fn chi_f_finite_difference(&self, step: f64) -> PyResult<f64> {
        sus::chi_f_finite_difference(&self.spec, step).py()
    }

    fn qfi_exact(&self) -> PyResult<f64> {
        sus::qfi_exact(&self.spec).py()
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, {}, {})", self.spec.family, self.spec.n_qubits, self.spec.lambda)
    }
}

fn rows(m: &fidsus_core::operator::CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[pyclass(name = "EstimationReport", module = "fidsus", frozen)]
struct PyReport {
    inner: EstimationReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn chi_f_hat(&self) -> f64 {
        self.inner.chi_f_hat
    }

    #[getter]
    fn p_hat(&self) -> f64 {
        self.inner.p_hat
    }

    #[getter]
    fn alpha_q(&self) -> f64 {
        self.inner.alpha_q
    }

    #[getter]
    fn k(&self) -> u64 {
        self.inner.k
    }

    #[getter]
    fn poly_degree(&self) -> usize {
        self.inner.poly_degree
    }

    #[getter]
    fn grover_applications(&self) -> u64 {
        self.inner.grover_applications
    }

    #[getter]
    fn total_queries(&self) -> u64 {
        self.inner.total_queries()
    }

    #[getter]
    fn queries(&self) -> BTreeMap<String, u64> {
        self.inner.queries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[getter]
    fn oracle_values(&self) -> BTreeMap<String, f64> {
        self.inner.oracle_values.clone()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("reports serialize")
    }

    fn __repr__(&self) -> String {
        format!("EstimationReport(chi_f_hat={}, k={})", self.inner.chi_f_hat, self.inner.k)
    }
}

/// Pipeline estimate of `chi_F`; `n_runs > 1` takes the median of that many runs.
#[pyfunction]
#[pyo3(signature = (model, eps, seed = 0, n_runs = 1))]
fn estimate_chi_f(py: Python<'_>, model: &PyModel, eps: f64, seed: u64, n_runs: usize) -> PyResult<PyReport> {
    let spec = model.spec.clone();
    let inner = py
        .detach(|| sus::prepare_chi_f(&spec, eps, &PipelineOptions::default())?.run_with(n_runs, seed))
        .py()?;
    Ok(PyReport { inner })
}

/// Frustration-free pipeline on the projector chain with `n_qubits` sites.
#[pyfunction]
#[pyo3(signature = (n_qubits, eps, seed = 0))]
fn estimate_chi_f_ff(py: Python<'_>, n_qubits: usize, eps: f64, seed: u64) -> PyResult<PyReport> {
    let spec = models::ModelSpec::new(Family::FfProjectorChain, n_qubits, 0.0);
    let inner = py
        .detach(|| {
            let (m, driving) = experiments::sweep::ff_model_for(&spec)?;
            sus::estimate_chi_f_ff(&m, &driving, eps, seed)
        })
        .py()?;
    Ok(PyReport { inner })
}

/// Exact static susceptibility of the model's driving term.
#[pyfunction]
fn static_susceptibility_exact(model: &PyModel) -> PyResult<f64> {
    let (h, o) = models::build_dense(&model.spec).py()?;
    sus::static_susceptibility_exact(&h, &o).py()
}

#[pyfunction]
#[pyo3(signature = (model, eps, seed = 0))]
fn qfi(py: Python<'_>, model: &PyModel, eps: f64, seed: u64) -> PyResult<f64> {
    let spec = model.spec.clone();
    py.detach(|| sus::qfi(&spec, eps, seed)).py()
}

#[pyclass(name = "Polynomial", module = "fidsus", frozen)]
struct PyPolynomial {
    inner: ChebyshevPolynomial,
}

#[pymethods]
impl PyPolynomial {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.inner.eval(x).py()
    }

    /// `(max_abs, parity_defect, sup_error)` on the check grids.
    fn check(&self) -> PyResult<(f64, f64, Option<f64>)> {
        let c = poly::check_polynomial(&self.inner).py()?;
        Ok((c.max_abs, c.parity_defect, c.sup_error))
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: ChebyshevPolynomial::from_json(s).py()? })
    }
}

/// Odd approximation of `(3/4) delta / x` on `delta <= |x| <= 1`.
#[pyfunction]
fn fit_inverse(delta: f64, eps: f64) -> PyResult<PyPolynomial> {
    Ok(PyPolynomial { inner: poly::fit_inverse(delta, eps, &FitOptions::default()).py()? })
}

#[pyfunction]
fn fit_sqrt_inverse(delta: f64, eps: f64) -> PyResult<PyPolynomial> {
    Ok(PyPolynomial { inner: poly::fit_sqrt_inverse(delta, eps, &FitOptions::default()).py()? })
}

#[pyfunction]
fn fit_ff_inverse(r: usize, gap: f64, eps: f64) -> PyResult<PyPolynomial> {
    Ok(PyPolynomial { inner: poly::fit_ff_inverse(r, gap, eps, &FitOptions::default()).py()? })
}

/// One amplitude-estimation run on a two-level system with success probability `p`.
#[pyfunction]
#[pyo3(signature = (p, k, seed = 0, n_runs = 1))]
fn amplitude_estimate(p: f64, k: u64, seed: u64, n_runs: usize) -> PyResult<f64> {
    let est = AmplitudeEstimator::from_probability(p).py()?;
    let r = if n_runs == 1 { est.estimate(k, seed) } else { est.median(k, n_runs, seed) };
    Ok(r.py()?.p_hat)
}

#[pyfunction]
fn qae_bound(p: f64, k: u64) -> f64 {
    core_qae_bound(p, k)
}

/// `(lambda_c, curvature, value, at_boundary)` from `(lambda, chi)` pairs.
#[pyfunction]
fn detect_peak(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64, bool)> {
    let p = experiments::detect_peak(&points).py()?;
    Ok((p.lambda_c, p.curvature, p.value, p.at_boundary))
}

/// Runs a sweep from TOML text and returns one dict per row. With `out_dir`
/// the configured files are written as well.
#[pyfunction]
#[pyo3(signature = (config_toml, out_dir = None, deterministic = true))]
fn run_sweep<'py>(
    py: Python<'py>,
    config_toml: &str,
    out_dir: Option<PathBuf>,
    deterministic: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_toml(config_toml).py()?;
    let rows = py
        .detach(|| match &out_dir {
            Some(dir) => experiments::run_sweep(&cfg, dir, deterministic).map(|o| o.rows),
            None => experiments::sweep_rows(&cfg),
        })
        .py()?;
    let text = serde_json::to_string(&rows).expect("rows serialize");
    py.import("json")?.call_method1("loads", (text,))
}

/// Slopes of a scaling study keyed by series name.
#[pyfunction]
fn run_scaling_study(py: Python<'_>, config_toml: &str, kind: &str) -> PyResult<BTreeMap<String, f64>> {
    let cfg = ExperimentConfig::from_toml(config_toml).py()?;
    let spec = match &cfg.scaling {
        Some(s) => ScalingSpec { kind: kind.parse().py()?, ..s.clone() },
        None => ScalingSpec::new(kind.parse().py()?),
    };
    let res = py.detach(|| experiments::run_scaling_study(&spec, &cfg)).py()?;
    Ok(res.fits.iter().map(|(k, f)| (k.clone(), f.slope)).collect())
}

/// `(name, declared_eps, error, passed)` for every encoding built for `model`.
#[pyfunction]
fn verify_encodings(model: &PyModel, eps: f64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let checks = experiments::encoding_checks(&model.spec, eps).py()?;
    Ok(checks.into_iter().map(|c| (c.name, c.declared_eps, c.error, c.passed)).collect())
}

#[pymodule]
fn fidsus(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FidsusError", m.py().get_type::<FidsusError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyPolynomial>()?;
    m.add_function(wrap_pyfunction!(estimate_chi_f, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_chi_f_ff, m)?)?;
    m.add_function(wrap_pyfunction!(static_susceptibility_exact, m)?)?;
    m.add_function(wrap_pyfunction!(qfi, m)?)?;
    m.add_function(wrap_pyfunction!(fit_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(fit_sqrt_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ff_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(qae_bound, m)?)?;
    m.add_function(wrap_pyfunction!(detect_peak, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_scaling_study, m)?)?;
    m.add_function(wrap_pyfunction!(verify_encodings, m)?)?;
    Ok(())
}
