//! Python bindings: tables as nested lists, errors as `DcopulaError`.

use dcopula::bernoulli::{self, ExtendedOddsRatio};
use dcopula::dependence::{odds_ratio_matrix, pearson_correlation, yule_upsilon};
use dcopula::families::{self, ContinuousCopula};
use dcopula::infinite::{self, DensityGrid};
use dcopula::pmf::{from_counts, JointPmf, MarginPair};
use dcopula::scaling::{classify_existence, copula_pmf, couple, IpfOptions, ScalingDiagnostics};
use dcopula::viz::{confetti_svg, ConfettiOptions};
use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(dcopula_py, DcopulaError, PyValueError);
create_exception!(dcopula_py, InfeasibleError, DcopulaError);

fn err(e: dcopula::Error) -> PyErr {
    match e {
        dcopula::Error::Infeasible(_) => InfeasibleError::new_err(e.to_string()),
        _ => DcopulaError::new_err(e.to_string()),
    }
}

fn array(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let r = rows.len();
    let s = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != s) {
        return Err(DcopulaError::new_err("rows must all have the same length"));
    }
    Array2::from_shape_vec((r, s), rows.into_iter().flatten().collect())
        .map_err(|e| DcopulaError::new_err(e.to_string()))
}

fn odds(w: f64) -> PyResult<ExtendedOddsRatio> {
    ExtendedOddsRatio::new(w).map_err(err)
}

fn opts(tol: f64) -> IpfOptions {
    IpfOptions::with_tol(tol)
}

fn diagnostics<'py>(py: Python<'py>, d: &ScalingDiagnostics) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("iterations", d.iterations)?;
    out.set_item("margin_error", d.margin_error)?;
    out.set_item("class", d.classification.tag.to_string())?;
    out.set_item("rate", d.rate)?;
    out.set_item("forced_zeros", d.classification.forced_zeros.clone())?;
    Ok(out)
}

/// A bivariate pmf on a finite grid.
#[pyclass(name = "JointPmf", module = "dcopula_py", frozen)]
struct PyJointPmf {
    inner: JointPmf,
}

#[pymethods]
impl PyJointPmf {
    /// Probabilities summing to one; use `from_weights` or `from_counts` otherwise.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: JointPmf::new(array(rows)?).map_err(err)? })
    }

    #[staticmethod]
    fn from_weights(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: JointPmf::from_weights(array(rows)?).map_err(err)? })
    }

    #[staticmethod]
    fn from_counts(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: from_counts(&array(rows)?).map_err(err)? })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    /// `(row_margin, col_margin)`.
    fn margins(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.inner.margins();
        (m.rows().to_vec(), m.cols().to_vec())
    }

    /// Odds ratios anchored at cell (0, 0); `None` where undefined.
    fn odds_ratios(&self) -> Vec<Vec<Option<f64>>> {
        odds_ratio_matrix(&self.inner)
            .entries()
            .outer_iter()
            .map(|row| row.to_vec())
            .collect()
    }

    /// Existence class of the copula pmf: "A", "B1", "B2" or "C".
    fn classify(&self) -> PyResult<String> {
        let (r, s) = self.inner.shape();
        let class = classify_existence(&self.inner.support(0.0), &MarginPair::uniform(r, s)).map_err(err)?;
        Ok(class.tag.to_string())
    }

    /// The copula pmf and the fit diagnostics.
    #[pyo3(signature = (tol = 1e-12))]
    fn copula<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<(Self, Bound<'py, PyDict>)> {
        let (cop, d) = copula_pmf(&self.inner, &opts(tol)).map_err(err)?;
        Ok((Self { inner: cop }, diagnostics(py, &d)?))
    }

    /// Gives this copula pmf new margins.
    #[pyo3(signature = (row_margin, col_margin, tol = 1e-12))]
    fn couple(&self, row_margin: Vec<f64>, col_margin: Vec<f64>, tol: f64) -> PyResult<Self> {
        let targets = MarginPair::normalized(row_margin, col_margin).map_err(err)?;
        let (p, _) = couple(&self.inner, &targets, &opts(tol)).map_err(err)?;
        Ok(Self { inner: p })
    }

    /// Yule's coefficient; the pmf must be a copula pmf.
    fn upsilon(&self) -> PyResult<f64> {
        yule_upsilon(&self.inner).map_err(err)
    }

    fn pearson(&self) -> f64 {
        pearson_correlation(&self.inner)
    }

    #[pyo3(signature = (cell_size = 40.0, show_margins = true))]
    fn confetti_svg(&self, cell_size: f64, show_margins: bool) -> PyResult<String> {
        let o = ConfettiOptions { cell_size, show_margins, ..ConfettiOptions::default() };
        confetti_svg(&self.inner, &o).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("JointPmf({:?})", self.inner.to_rows())
    }
}

fn wrap(p: dcopula::Result<JointPmf>) -> PyResult<PyJointPmf> {
    p.map(|inner| PyJointPmf { inner }).map_err(err)
}

fn heights(g: dcopula::Result<DensityGrid>) -> PyResult<Vec<Vec<f64>>> {
    let g = g.map_err(err)?;
    Ok(g.heights().outer_iter().map(|r| r.to_vec()).collect())
}

#[pyfunction]
fn bernoulli_copula(omega: f64) -> PyResult<PyJointPmf> {
    Ok(PyJointPmf { inner: bernoulli::bernoulli_copula(odds(omega)?) })
}

/// The 2x2 table with odds ratio `omega` and P(X=1), P(Y=1) = `pi_x`, `pi_y`.
#[pyfunction]
fn reconstruct(omega: f64, pi_x: f64, pi_y: f64) -> PyResult<PyJointPmf> {
    wrap(bernoulli::reconstruct(odds(omega)?, pi_x, pi_y))
}

#[pyfunction]
#[pyo3(signature = (n, omega, tol = 1e-12))]
fn binomial_copula(n: usize, omega: f64, tol: f64) -> PyResult<PyJointPmf> {
    wrap(families::binomial_copula(n, odds(omega)?, &opts(tol)))
}

#[pyfunction]
#[pyo3(signature = (n, omega, tol = 1e-12))]
fn geometric_copula(n: usize, omega: f64, tol: f64) -> PyResult<PyJointPmf> {
    wrap(families::truncated_geometric_copula(n, odds(omega)?, &opts(tol)))
}

#[pyfunction]
#[pyo3(signature = (rows, cols, theta, tol = 1e-12))]
fn goodman_copula(rows: usize, cols: usize, theta: f64, tol: f64) -> PyResult<PyJointPmf> {
    wrap(families::goodman_copula(rows, cols, odds(theta)?, &opts(tol)))
}

/// Cell masses of a continuous copula, e.g. `"clayton:theta=-0.2"`.
#[pyfunction]
fn discretize_copula(spec: &str, rows: usize, cols: usize) -> PyResult<PyJointPmf> {
    let spec: ContinuousCopula = spec.parse().map_err(err)?;
    wrap(families::discretize_copula(&spec, rows, cols))
}

/// Density heights of the Poisson copula with common-shock ratio `omega`.
#[pyfunction]
#[pyo3(signature = (omega, n, epsilon = 1e-10, tol = 1e-12))]
fn poisson_copula_grid(omega: f64, n: usize, epsilon: f64, tol: f64) -> PyResult<Vec<Vec<f64>>> {
    heights(infinite::poisson_copula_grid(omega, n, epsilon, &opts(tol)))
}

#[pyfunction]
#[pyo3(signature = (omega, n, tol = 1e-12))]
fn geometric_copula_grid(omega: f64, n: usize, tol: f64) -> PyResult<Vec<Vec<f64>>> {
    heights(infinite::geometric_copula_grid(odds(omega)?, n, &opts(tol)))
}

#[pymodule]
fn dcopula_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DcopulaError", m.py().get_type::<DcopulaError>())?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyJointPmf>()?;
    m.add_function(wrap_pyfunction!(bernoulli_copula, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_copula, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_copula, m)?)?;
    m.add_function(wrap_pyfunction!(goodman_copula, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_copula, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_copula_grid, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_copula_grid, m)?)?;
    Ok(())
}
