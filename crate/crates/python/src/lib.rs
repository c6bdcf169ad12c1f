//! Python bindings. Structured results (classifications, decisions, traces)
//! are returned as plain dicts with the same fields as the Rust types.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use qhm_core::msolver::{AscentOptions, InvariantOutcome};
use qhm_core::space::{ball_discretization, random_cloud};
use qhm_core::{
    euclidean_cloud, glue, interval_grid, random_metric, regular_polygon_arc, subspace, validate_metric,
    FiniteMetricSpace, GlueSpec, QhmError, SignedMeasure, Tolerances,
};

fn err(e: QhmError) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A finite metric space given by its distance matrix.
#[pyclass(name = "MetricSpace", module = "qhm", frozen)]
struct MetricSpace {
    inner: FiniteMetricSpace,
}

impl From<FiniteMetricSpace> for MetricSpace {
    fn from(inner: FiniteMetricSpace) -> Self {
        MetricSpace { inner }
    }
}

#[pymethods]
impl MetricSpace {
    /// Validates `matrix`; `tol` defaults to 1e-9 times the largest entry.
    #[new]
    #[pyo3(signature = (matrix, labels=None, name=None, tol=None))]
    fn new(
        matrix: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
        name: Option<String>,
        tol: Option<f64>,
    ) -> PyResult<Self> {
        let scale = matrix.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        let tol = tol.unwrap_or(qhm_core::tolerance::DEFAULT_TRIANGLE_REL * scale);
        let x = validate_metric(&matrix, labels, tol).map_err(err)?;
        Ok(x.with_name(name.unwrap_or_else(|| "space".into())).into())
    }

    #[staticmethod]
    fn interval(a: f64, b: f64, n: usize) -> PyResult<Self> {
        Ok(interval_grid(a, b, n).map_err(err)?.into())
    }

    /// `n` equally spaced points on the unit circle, arc-length metric.
    #[staticmethod]
    fn circle(n: usize) -> PyResult<Self> {
        Ok(regular_polygon_arc(n).map_err(err)?.into())
    }

    #[staticmethod]
    #[pyo3(signature = (shells, points_per_shell=100))]
    fn ball(shells: usize, points_per_shell: usize) -> PyResult<Self> {
        Ok(ball_discretization(shells, points_per_shell).map_err(err)?.into())
    }

    #[staticmethod]
    fn cloud(coords: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(euclidean_cloud(&coords).map_err(err)?.into())
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, dim=None))]
    fn random(n: usize, seed: u64, dim: Option<usize>) -> PyResult<Self> {
        let x = match dim {
            None => random_metric(n, seed),
            Some(d) => random_cloud(n, d, seed),
        };
        Ok(x.map_err(err)?.into())
    }

    #[staticmethod]
    fn fixture(key: &str) -> PyResult<Self> {
        Ok(qhm_core::fixtures::fixture(key).map_err(err)?.space.into())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(qhm_core::io::space_from_json(text, None).map_err(err)?.into())
    }

    fn to_json(&self) -> String {
        qhm_core::io::space_to_json(&self.inner)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix_rows()
    }

    fn diameter(&self) -> f64 {
        qhm_core::diameter(&self.inner)
    }

    fn subspace(&self, indices: Vec<usize>) -> PyResult<Self> {
        Ok(subspace(&self.inner, &indices).map_err(err)?.into())
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        Ok(self.inner.scaled(factor).map_err(err)?.into())
    }

    /// Joins `self` and `other` with every cross distance equal to `c`.
    fn glue(&self, other: &MetricSpace, c: f64) -> PyResult<Self> {
        Ok(glue(&GlueSpec::new(self.inner.clone(), other.inner.clone(), c)).map_err(err)?.into())
    }

    fn __repr__(&self) -> String {
        format!("MetricSpace(name={:?}, n={})", self.inner.name(), self.inner.len())
    }
}

fn measure(x: &MetricSpace, weights: Vec<f64>) -> PyResult<SignedMeasure> {
    SignedMeasure::on(&x.inner, weights).map_err(err)
}

/// Spectral classification: verdict, witness, kernel basis, eigenvalues, margin.
#[pyfunction]
#[pyo3(signature = (space, tol=1e-9))]
fn classify<'py>(py: Python<'py>, space: &MetricSpace, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &qhm_core::classify(&space.inner, tol).map_err(err)?)
}

/// Finiteness decision for `M` with value and maximal measure when finite.
#[pyfunction]
#[pyo3(signature = (space, tol=1e-9))]
fn m_constant<'py>(py: Python<'py>, space: &MetricSpace, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &qhm_core::m_constant(&space.inner, &Tolerances::with_classify(tol)).map_err(err)?)
}

/// Mass-one measure with constant potential, or `None` when the system is inconsistent.
#[pyfunction]
#[pyo3(signature = (space, tol=1e-9))]
fn invariant_measure<'py>(py: Python<'py>, space: &MetricSpace, tol: f64) -> PyResult<Option<Bound<'py, PyAny>>> {
    match qhm_core::invariant_measure(&space.inner, tol).map_err(err)? {
        InvariantOutcome::Solved(s) => Ok(Some(to_py(py, &s)?)),
        InvariantOutcome::NoSolution { .. } => Ok(None),
    }
}

/// `I(mu)`, or `I(mu, nu)` when `nu` is given.
#[pyfunction]
#[pyo3(signature = (space, mu, nu=None))]
fn energy(space: &MetricSpace, mu: Vec<f64>, nu: Option<Vec<f64>>) -> PyResult<f64> {
    let mu = measure(space, mu)?;
    match nu {
        None => qhm_core::energy(&space.inner, &mu),
        Some(nu) => qhm_core::energy_bilinear(&space.inner, &mu, &measure(space, nu)?),
    }
    .map_err(err)
}

#[pyfunction]
fn potential(space: &MetricSpace, mu: Vec<f64>) -> PyResult<Vec<f64>> {
    qhm_core::potential(&space.inner, &measure(space, mu)?).map_err(err)
}

/// Closed-form `M` of a glued space: `{"kind": "Finite" | "Infinite" | "Boundary", "value": ...}`.
#[pyfunction]
#[pyo3(signature = (m_x, m_y, c, rel_tol=1e-12))]
fn glued_m_predict<'py>(py: Python<'py>, m_x: f64, m_y: f64, c: f64, rel_tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &qhm_core::glued_m_predict(m_x, m_y, c, rel_tol).map_err(err)?)
}

/// Projected gradient ascent of the energy over mass-one measures.
#[pyfunction]
#[pyo3(signature = (space, iterations, seed=0, blowup=None))]
fn ascent_oracle<'py>(
    py: Python<'py>,
    space: &MetricSpace,
    iterations: usize,
    seed: u64,
    blowup: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut opts = AscentOptions::new(iterations, seed);
    opts.blowup = blowup;
    to_py(py, &qhm_core::ascent_oracle(&space.inner, &opts))
}

#[pyfunction]
fn fixture_keys() -> Vec<String> {
    qhm_core::fixtures::catalogue_keys()
}

#[pymodule]
#[pyo3(name = "qhm")]
fn qhm_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<MetricSpace>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(m_constant, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_measure, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(potential, m)?)?;
    m.add_function(wrap_pyfunction!(glued_m_predict, m)?)?;
    m.add_function(wrap_pyfunction!(ascent_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_keys, m)?)?;
    Ok(())
}
