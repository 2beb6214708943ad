//! Python bindings: density matrices, measures, features and the SVR/SVQR models.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use qrest::qcore::{self, ComplexMatrix, C64};
use qrest::sdp::{default_bipartitions, DEFAULT_TOL};
use qrest::svm::{self, KernelSpec, ModelKind, TrainConfig};
use qrest::{features, measures, states, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "DensityMatrix", module = "qrest_py")]
#[derive(Clone)]
struct PyDensityMatrix {
    inner: qcore::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    /// Builds from a nested list of complex entries; `dims` defaults to a single system.
    #[new]
    #[pyo3(signature = (rows, dims=None))]
    fn new(rows: Vec<Vec<C64>>, dims: Option<Vec<usize>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let m = ComplexMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let inner = qcore::DensityMatrix::new(m, dims.unwrap_or_else(|| vec![n])).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Vec<Vec<C64>> {
        let m = self.inner.matrix();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    fn trace_power(&self, m: u32) -> f64 {
        qcore::trace_power(&self.inner, m)
    }

    fn partial_trace(&self, keep: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: qcore::partial_trace(&self.inner, &keep).map_err(py_err)?,
        })
    }

    fn partial_transpose(&self, subsystems: Vec<usize>) -> PyResult<Vec<Vec<C64>>> {
        let m = qcore::partial_transpose_matrix(self.inner.matrix(), self.inner.dims(), &subsystems).map_err(py_err)?;
        Ok((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dims={:?})", self.inner.dims())
    }
}

fn wrap(r: qrest::Result<qcore::DensityMatrix>) -> PyResult<PyDensityMatrix> {
    r.map(|inner| PyDensityMatrix { inner }).map_err(py_err)
}

#[pyfunction]
fn random_pure(dims: Vec<usize>, seed: u64) -> PyResult<PyDensityMatrix> {
    wrap(states::random_pure(&dims, seed).map(|p| p.to_density()))
}

#[pyfunction]
fn random_mixed(dims: Vec<usize>, k: usize, seed: u64) -> PyResult<PyDensityMatrix> {
    wrap(states::random_mixed(&dims, k, seed))
}

#[pyfunction]
fn random_separable(dims: Vec<usize>, k: usize, seed: u64) -> PyResult<PyDensityMatrix> {
    wrap(states::random_separable(&dims, k, seed))
}

#[pyfunction]
fn werner(d: usize, f: f64) -> PyResult<PyDensityMatrix> {
    wrap(states::werner(d, f))
}

#[pyfunction]
fn isotropic(d: usize, fidelity: f64) -> PyResult<PyDensityMatrix> {
    wrap(states::isotropic(d, fidelity))
}

#[pyfunction]
fn fidelity(rho: &PyDensityMatrix, sigma: &PyDensityMatrix) -> PyResult<f64> {
    qcore::fidelity_exact(&rho.inner, &sigma.inner).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (rho, sigma, tol=DEFAULT_TOL))]
fn max_fidelity_fixed(rho: &PyDensityMatrix, sigma: &PyDensityMatrix, tol: f64) -> PyResult<f64> {
    qrest::sdp::max_fidelity_fixed(&rho.inner, &sigma.inner, tol).map_err(py_err)
}

#[pyfunction]
fn c_l1(rho: &PyDensityMatrix) -> f64 {
    measures::c_l1(&rho.inner)
}

#[pyfunction]
fn c_rel_ent(rho: &PyDensityMatrix) -> f64 {
    measures::c_rel_ent(&rho.inner)
}

#[pyfunction]
#[pyo3(signature = (rho, tol=DEFAULT_TOL))]
fn c_geometric(rho: &PyDensityMatrix, tol: f64) -> PyResult<f64> {
    measures::c_geometric(&rho.inner, tol).map_err(py_err)
}

/// PPT lower bound on the geometric measure of entanglement; all cuts by default.
#[pyfunction]
#[pyo3(signature = (rho, bipartitions=None, tol=DEFAULT_TOL))]
fn eg_lower(rho: &PyDensityMatrix, bipartitions: Option<Vec<Vec<usize>>>, tol: f64) -> PyResult<f64> {
    let cuts = bipartitions.unwrap_or_else(|| default_bipartitions(rho.inner.dims().len()));
    measures::eg_lower(&rho.inner, &cuts, tol).map_err(py_err)
}

#[pyfunction]
fn coherence_features(rho: &PyDensityMatrix) -> PyResult<(Vec<String>, Vec<f64>)> {
    let fv = features::coherence_features(&rho.inner).map_err(py_err)?;
    Ok((fv.schema.names, fv.values))
}

#[pyfunction]
fn entanglement_features(rho: &PyDensityMatrix) -> PyResult<(Vec<String>, Vec<f64>)> {
    let fv = features::entanglement_features(&rho.inner).map_err(py_err)?;
    Ok((fv.schema.names, fv.values))
}

/// `(mse, mape or None, r2, p_over)`.
#[pyfunction]
fn evaluate(y_true: Vec<f64>, y_pred: Vec<f64>) -> PyResult<(f64, Option<f64>, f64, f64)> {
    let r = svm::evaluate(&y_true, &y_pred).map_err(py_err)?;
    Ok((r.mse, r.mape, r.r2, r.p_over))
}

#[pyclass(name = "SvrModel", module = "qrest_py")]
struct PySvrModel {
    inner: svm::SvrModel,
}

#[pymethods]
impl PySvrModel {
    /// Trains with an RBF kernel; passing `delta` selects quantile regression.
    #[staticmethod]
    #[pyo3(signature = (x, y, c=10.0, epsilon=0.01, tau=1.0, delta=None, tol=1e-3))]
    fn train(x: Vec<Vec<f64>>, y: Vec<f64>, c: f64, epsilon: f64, tau: f64, delta: Option<f64>, tol: f64) -> PyResult<Self> {
        let kind = if delta.is_some() { ModelKind::Svqr } else { ModelKind::Svr };
        let cfg = TrainConfig {
            c,
            epsilon,
            delta,
            kernel: KernelSpec::Rbf { tau },
            tol,
            ..Default::default()
        };
        let inner = svm::train(kind, &x, &y, &cfg).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: svm::SvrModel::load(&path).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self {
            inner: svm::SvrModel::from_json(s).map_err(py_err)?,
        })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&x).map_err(py_err)
    }

    fn predict_batch(&self, xs: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict_batch(&xs).map_err(py_err)
    }

    #[getter]
    fn num_support(&self) -> usize {
        self.inner.num_support()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.stats.converged
    }
}

/// Runs the `qrest` command line with `args` (without the program name); returns the exit status.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    qrest::pipeline::cli::run(std::iter::once("qrest".to_string()).chain(args))
}

#[pymodule]
fn qrest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PySvrModel>()?;
    m.add_function(wrap_pyfunction!(random_pure, m)?)?;
    m.add_function(wrap_pyfunction!(random_mixed, m)?)?;
    m.add_function(wrap_pyfunction!(random_separable, m)?)?;
    m.add_function(wrap_pyfunction!(werner, m)?)?;
    m.add_function(wrap_pyfunction!(isotropic, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(max_fidelity_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(c_l1, m)?)?;
    m.add_function(wrap_pyfunction!(c_rel_ent, m)?)?;
    m.add_function(wrap_pyfunction!(c_geometric, m)?)?;
    m.add_function(wrap_pyfunction!(eg_lower, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_features, m)?)?;
    m.add_function(wrap_pyfunction!(entanglement_features, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
