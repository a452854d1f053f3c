//! Python bindings: matrices, ensembles, potentials, barrier chains, the
//! sparsifier and the experiment runner.

use matcov::barrier::{self, ChainParams, Direction};
use matcov::ensembles::{self, EnsembleSpec};
use matcov::experiments::{self, ExperimentConfig};
use matcov::{linalg, sparsifier, RngStream};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn err(e: matcov::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Dense symmetric matrix.
#[pyclass(name = "SymMatrix", module = "pymatcov", frozen, from_py_object)]
#[derive(Clone)]
struct PySymMatrix(matcov::SymMatrix);

#[pymethods]
impl PySymMatrix {
    /// Builds from a list of rows; the input must be symmetric.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        matcov::SymMatrix::from_rows(&rows).map(Self).map_err(err)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self(matcov::SymMatrix::identity(n))
    }

    #[staticmethod]
    fn zeros(n: usize) -> Self {
        Self(matcov::SymMatrix::zeros(n))
    }

    #[staticmethod]
    fn from_diag(diag: Vec<f64>) -> Self {
        Self(matcov::SymMatrix::from_diag(&diag))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        matcov::SymMatrix::from_json(text).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.0.dim();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("index ({i}, {j}) out of range for dimension {n}")));
        }
        Ok(self.0.get(i, j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Eigenvalues in increasing order.
    fn eigvals(&self) -> PyResult<Vec<f64>> {
        linalg::sym_eigvals(&self.0).map_err(err)
    }

    fn operator_norm(&self) -> PyResult<f64> {
        linalg::operator_norm(&self.0).map_err(err)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self(self.0.scaled(factor))
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(err)
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.dim()
    }

    fn __repr__(&self) -> String {
        format!("SymMatrix(dim={}, trace={})", self.0.dim(), self.0.trace())
    }
}

/// Distribution of random PSD matrices with identity mean.
#[pyclass(name = "Ensemble", module = "pymatcov", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnsemble(EnsembleSpec);

#[pymethods]
impl PyEnsemble {
    /// Parses `{"kind": ..., "params": {...}}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = EnsembleSpec::from_json(text).map_err(err)?;
        spec.validate().map_err(err)?;
        Ok(Self(spec))
    }

    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        Self::checked(EnsembleSpec::Identity { n })
    }

    #[staticmethod]
    fn rank_one_gaussian(n: usize) -> PyResult<Self> {
        Self::checked(EnsembleSpec::RankOneGaussian { n })
    }

    #[staticmethod]
    fn aubrun_basis(n: usize) -> PyResult<Self> {
        Self::checked(EnsembleSpec::AubrunBasis { n })
    }

    #[staticmethod]
    fn isotropic_gaussian_matrix(n: usize, m: usize) -> PyResult<Self> {
        Self::checked(EnsembleSpec::IsotropicGaussianMatrix { n, m })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    /// `count` independent draws from stream `(seed, stream)`.
    #[pyo3(signature = (count, seed, stream = 0))]
    fn sample(&self, count: usize, seed: u64, stream: u64) -> Vec<PySymMatrix> {
        let mut rng = RngStream::new(seed, stream).generator();
        (0..count).map(|_| PySymMatrix(ensembles::sample(&self.0, &mut rng))).collect()
    }

    /// `(1/count) sum B_i`, using the Wishart shortcut where it applies.
    #[pyo3(signature = (count, seed, stream = 0))]
    fn sample_mean(&self, count: usize, seed: u64, stream: u64) -> PyResult<PySymMatrix> {
        if count == 0 {
            return Err(PyValueError::new_err("count must be positive"));
        }
        let mut rng = RngStream::new(seed, stream).generator();
        Ok(PySymMatrix(ensembles::sample_sum(&self.0, count, true, &mut rng).scaled(1.0 / count as f64)))
    }

    fn __repr__(&self) -> String {
        format!("Ensemble({})", self.0.to_json())
    }
}

impl PyEnsemble {
    fn checked(spec: EnsembleSpec) -> PyResult<Self> {
        spec.validate().map_err(err)?;
        Ok(Self(spec))
    }
}

/// Output of the deterministic sparsifier.
#[pyclass(name = "SparsifyResult", module = "pymatcov", frozen, get_all)]
struct PySparsifyResult {
    weights: Vec<f64>,
    support_size: usize,
    sandwich_lo: f64,
    sandwich_hi: f64,
    passed: bool,
}

#[pymethods]
impl PySparsifyResult {
    fn __repr__(&self) -> String {
        format!(
            "SparsifyResult(support_size={}, sandwich=[{}, {}], passed={})",
            self.support_size, self.sandwich_lo, self.sandwich_hi, self.passed
        )
    }
}

fn unwrap_list(list: &[PySymMatrix]) -> Vec<matcov::SymMatrix> {
    list.iter().map(|m| m.0.clone()).collect()
}

/// `Tr (A - l I)^{-1}`; requires `l` strictly below the spectrum.
#[pyfunction]
fn lower_potential(a: &PySymMatrix, l: f64) -> PyResult<f64> {
    linalg::lower_potential(&a.0, l).map_err(err)
}

/// `Tr (u I - A)^{-1}`; requires `u` strictly above the spectrum.
#[pyfunction]
fn upper_potential(a: &PySymMatrix, u: f64) -> PyResult<f64> {
    linalg::upper_potential(&a.0, u).map_err(err)
}

#[pyfunction]
fn trace_inner(x: &PySymMatrix, y: &PySymMatrix) -> PyResult<f64> {
    linalg::trace_inner(&x.0, &y.0).map_err(err)
}

/// Nonnegative weights with `B <= sum y_i B_i <= (1 + eps) B` and small support.
#[pyfunction]
fn sparsify(matrices: Vec<PySymMatrix>, epsilon: f64) -> PyResult<PySparsifyResult> {
    let out = sparsifier::sparsify(&unwrap_list(&matrices), epsilon).map_err(err)?;
    Ok(PySparsifyResult {
        weights: out.weights,
        support_size: out.support_size,
        sandwich_lo: out.sandwich_lo,
        sandwich_hi: out.sandwich_hi,
        passed: out.pass,
    })
}

/// Extreme generalized eigenvalues `(lo, hi, passed)` of the weighted sum.
#[pyfunction]
fn verify_sandwich(matrices: Vec<PySymMatrix>, weights: Vec<f64>, epsilon: f64) -> PyResult<(f64, f64, bool)> {
    let check = sparsifier::verify_sandwich(&unwrap_list(&matrices), &weights, epsilon).map_err(err)?;
    Ok((check.lo, check.hi, check.pass))
}

#[pyfunction]
fn support_bound(n: usize, epsilon: f64) -> usize {
    sparsifier::support_bound(n, epsilon)
}

/// Runs a barrier chain and returns its report as a dict.
#[pyfunction]
#[pyo3(signature = (ensemble, samples, direction, epsilon, seed, stream = 0))]
fn run_chain<'py>(
    py: Python<'py>,
    ensemble: &PyEnsemble,
    samples: usize,
    direction: &str,
    epsilon: f64,
    seed: u64,
    stream: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let direction = match direction {
        "lower" => Direction::Lower,
        "upper" => Direction::Upper,
        other => return Err(PyValueError::new_err(format!("direction must be 'lower' or 'upper', got {other:?}"))),
    };
    let report = py
        .detach(|| barrier::run_chain(&ensemble.0, samples, direction, &ChainParams::new(epsilon), RngStream::new(seed, stream)))
        .map_err(err)?;
    json_loads(py, &report.to_json())
}

/// Runs an experiment from a JSON configuration and returns the report as a dict.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let config = ExperimentConfig::from_json(config_json).map_err(err)?;
    let report = py.detach(|| experiments::run_experiment(&config)).map_err(err)?;
    json_loads(py, &report.to_json())
}

#[pymodule]
fn pymatcov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymMatrix>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PySparsifyResult>()?;
    m.add_function(wrap_pyfunction!(lower_potential, m)?)?;
    m.add_function(wrap_pyfunction!(upper_potential, m)?)?;
    m.add_function(wrap_pyfunction!(trace_inner, m)?)?;
    m.add_function(wrap_pyfunction!(sparsify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_sandwich, m)?)?;
    m.add_function(wrap_pyfunction!(support_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_chain, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
