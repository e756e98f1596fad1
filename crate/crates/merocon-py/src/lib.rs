//! Python bindings: fields, connection data, geodesic integration and the
//! quadratic atlas. Structured results come back as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use merocon::algebra::Chart;
use merocon::atlas::{classify_quadratic, closed_form_oracle, dynamics_dossier, template_field, AtlasLabel};
use merocon::field::connection_data;
use merocon::geodesic::{integrate, lift_nu_polar, ChartState, IntegratorConfig};
use merocon::io::{build_report, check_connection, field_spec_json, parse_field_spec, trajectory_csv, trajectory_svg};
use merocon::{ConnectionData, Error, HomogeneousField};

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Parse(_) | Error::Dicritical => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn chart_of(s: &str) -> PyResult<Chart> {
    match s {
        "0" => Ok(Chart::Zero),
        "inf" => Ok(Chart::Inf),
        _ => Err(PyValueError::new_err(format!("chart must be '0' or 'inf', got {s:?}"))),
    }
}

/// Homogeneous vector field on C² of degree nu + 1.
#[pyclass(name = "Field", module = "merocon", from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: HomogeneousField,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(q1: Vec<Complex64>, q2: Vec<Complex64>) -> PyResult<Self> {
        if q1.len() < 3 {
            return Err(PyValueError::new_err("need at least 3 coefficients per component"));
        }
        let nu = q1.len() - 2;
        Ok(PyField { inner: HomogeneousField::new(nu, q1, q2).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyField { inner: parse_field_spec(text, None).map_err(err)? })
    }

    /// Normal-form model with X = zeta^mu_x, Y = rho zeta^(mu_x-1) (1 + a zeta^n).
    #[staticmethod]
    #[pyo3(signature = (mu_x, rho, a = Complex64::new(0.0, 0.0), n = 0))]
    fn model(mu_x: usize, rho: Complex64, a: Complex64, n: usize) -> PyResult<Self> {
        Ok(PyField { inner: HomogeneousField::model(mu_x, rho, a, n).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (label, params = Vec::new()))]
    fn template(label: &str, params: Vec<Complex64>) -> PyResult<Self> {
        let l = AtlasLabel::from_parts(label, &params).map_err(err)?;
        Ok(PyField { inner: template_field(&l).map_err(err)? })
    }

    #[getter]
    fn nu(&self) -> usize {
        self.inner.nu
    }

    #[getter]
    fn q1(&self) -> Vec<Complex64> {
        self.inner.q1.clone()
    }

    #[getter]
    fn q2(&self) -> Vec<Complex64> {
        self.inner.q2.clone()
    }

    fn is_dicritical(&self) -> bool {
        self.inner.is_dicritical()
    }

    fn connection(&self) -> PyResult<PyConnection> {
        Ok(PyConnection { inner: connection_data(&self.inner).map_err(err)? })
    }

    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &build_report(&self.inner).map_err(err)?)
    }

    /// Atlas label, conjugacy and dossier of a quadratic field.
    fn atlas<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let r = classify_quadratic(&self.inner).map_err(err)?;
        to_py(py, &dynamics_dossier(&self.inner, &r).map_err(err)?)
    }

    fn to_json(&self) -> String {
        field_spec_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Field(nu={}, q1={:?}, q2={:?})", self.inner.nu, self.inner.q1, self.inner.q2)
    }
}

/// Connection data of a non-dicritical field.
#[pyclass(name = "Connection", module = "merocon", from_py_object)]
#[derive(Clone)]
struct PyConnection {
    inner: ConnectionData,
}

#[pymethods]
impl PyConnection {
    #[getter]
    fn nu(&self) -> usize {
        self.inner.nu
    }

    #[getter]
    fn residues(&self) -> Vec<Complex64> {
        self.inner.directions.iter().map(|d| d.residue).collect()
    }

    #[getter]
    fn induced_residues(&self) -> Vec<Complex64> {
        self.inner.directions.iter().map(|d| d.induced_residue).collect()
    }

    /// Directions as (w1, w2) homogeneous coordinates.
    #[getter]
    fn directions(&self) -> Vec<(Complex64, Complex64)> {
        self.inner.directions.iter().map(|d| d.point.homog()).collect()
    }

    #[getter]
    fn orders(&self) -> Vec<usize> {
        self.inner.directions.iter().map(|d| d.mu_x).collect()
    }

    fn residue_sum(&self) -> Complex64 {
        self.inner.residue_sum()
    }

    fn induced_residue_sum(&self) -> Complex64 {
        self.inner.induced_residue_sum()
    }

    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    #[pyo3(signature = (seed = 0))]
    fn check<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &check_connection(&self.inner, seed))
    }

    /// Integrate from a state (chart, zeta, v) or, with `point`, from a
    /// point (z, w) of C². Keyword options override IntegratorConfig fields.
    #[pyo3(signature = (zeta = None, v = None, chart = "0", point = None, **options))]
    fn integrate(
        &self,
        zeta: Option<Complex64>,
        v: Option<Complex64>,
        chart: &str,
        point: Option<(Complex64, Complex64)>,
        options: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<PyTrajectory> {
        let init = match (point, zeta, v) {
            (Some(w), None, None) => lift_nu_polar(w, self.inner.nu).map_err(err)?,
            (None, Some(z), Some(v)) => ChartState::new(chart_of(chart)?, z, v, 0.0),
            _ => return Err(PyValueError::new_err("give zeta and v, or point")),
        };
        let mut cfg = serde_json::to_value(IntegratorConfig::default()).expect("json");
        if let Some(opts) = options {
            let text: String = opts.py().import("json")?.call_method1("dumps", (opts,))?.extract()?;
            let given: serde_json::Value = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            if let (Some(base), Some(extra)) = (cfg.as_object_mut(), given.as_object()) {
                for (k, val) in extra {
                    base.insert(k.clone(), val.clone());
                }
            }
        }
        let cfg: IntegratorConfig = serde_json::from_value(cfg).map_err(|e| PyValueError::new_err(e.to_string()))?;
        cfg.validate().map_err(err)?;
        let traj = integrate(&self.inner, &init, &cfg).map_err(err)?;
        Ok(PyTrajectory { traj, cd: self.inner.clone() })
    }
}

#[pyclass(name = "Trajectory", module = "merocon")]
struct PyTrajectory {
    traj: merocon::geodesic::Trajectory,
    cd: ConnectionData,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.traj.samples.iter().map(|s| s.t).collect()
    }

    /// Chart-0 coordinate of each sample (inf where the sample sits at ζ = ∞).
    #[getter]
    fn zeta(&self) -> Vec<Complex64> {
        self.traj
            .samples
            .iter()
            .map(|s| s.point().coord_in(Chart::Zero).unwrap_or(Complex64::new(f64::INFINITY, 0.0)))
            .collect()
    }

    #[getter]
    fn events<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.traj.events)
    }

    #[getter]
    fn termination<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.traj.termination)
    }

    #[getter]
    fn omega<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.traj.omega)
    }

    #[getter]
    fn invariant_drift(&self) -> f64 {
        self.traj.invariant_drift
    }

    fn count(&self, label: &str) -> usize {
        self.traj.count(label)
    }

    fn to_csv(&self) -> String {
        trajectory_csv(&self.traj)
    }

    fn to_svg(&self) -> String {
        trajectory_svg(&self.traj, &self.cd)
    }

    fn __len__(&self) -> usize {
        self.traj.samples.len()
    }
}

/// Exact integral curve of an atlas normal form at time t.
#[pyfunction]
#[pyo3(signature = (label, z0, w0, t, params = Vec::new()))]
fn closed_form(label: &str, z0: Complex64, w0: Complex64, t: f64, params: Vec<Complex64>) -> PyResult<(Complex64, Complex64)> {
    let l = AtlasLabel::from_parts(label, &params).map_err(err)?;
    closed_form_oracle(&l, (z0, w0), t).map_err(err)
}

#[pymodule]
#[pyo3(name = "merocon")]
fn merocon_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyConnection>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    Ok(())
}
