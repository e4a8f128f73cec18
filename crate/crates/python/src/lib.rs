//! Python bindings: meshes, a time-stepping simulation handle, the bound
//! evaluators and minimizers, and the experiment drivers.
//!
//! Structured results (reports, summaries) cross the boundary as `dict`s built
//! from their JSON form, so their keys match the files the CLI writes.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use shearlab::bounds::{self as bd, BoundInputs};
use shearlab::error::{BoundsError, ExperimentError, SolverError};
use shearlab::experiment::{self as ex, RunOptions};
use shearlab::fem::MixedSpace;
use shearlab::mesh::{self as ms, AnnulusSpec, ChannelSpec, Marker, MarkerTable};
use shearlab::solver::{BoundaryData, FlowState, Integrator, ModelParams, TimeSteppingConfig};
use shearlab::stats;

fn to_py_err(e: impl Into<ExperimentError>) -> PyErr {
    let e = e.into();
    match e {
        ExperimentError::Config(_)
        | ExperimentError::Bounds(BoundsError::InvalidInput(_))
        | ExperimentError::Solver(SolverError::InvalidConfig(_)) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_dict(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Triangular mesh with boundary markers.
#[pyclass(name = "Mesh", module = "shearlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: Arc<ms::Mesh>,
}

#[pymethods]
impl PyMesh {
    /// Structured channel `[0, L]²`, periodic in x, walls at z = 0 and z = L.
    #[staticmethod]
    #[pyo3(signature = (length=1.0, nx=8, nz=8, strip=None))]
    fn channel(length: f64, nx: usize, nz: usize, strip: Option<f64>) -> PyResult<Self> {
        let mut spec = ChannelSpec::new(length, nx, nz);
        spec.align_strip = strip;
        let mesh = ms::build_channel_mesh(&spec).map_err(to_py_err)?;
        Ok(PyMesh { inner: Arc::new(mesh) })
    }

    /// Eccentric annulus with `m` nodes on the outer and `n` on the inner circle.
    #[staticmethod]
    #[pyo3(signature = (m=60, n=30, refinement=1))]
    fn annulus(m: usize, n: usize, refinement: usize) -> PyResult<Self> {
        let mesh = ms::build_annulus_mesh(&AnnulusSpec::new(m, n), refinement).map_err(to_py_err)?;
        Ok(PyMesh { inner: Arc::new(mesh) })
    }

    /// MSH 2.2 file; physical names matching marker names are mapped.
    #[staticmethod]
    fn from_msh(path: PathBuf) -> PyResult<Self> {
        let mut markers = MarkerTable::default();
        for marker in Marker::ALL {
            markers.by_name.insert(marker.name().to_string(), marker);
        }
        let mesh = ms::import_msh(path, &markers).map_err(to_py_err)?;
        Ok(PyMesh { inner: Arc::new(mesh) })
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.inner.h_max()
    }

    #[getter]
    fn h_min(&self) -> f64 {
        self.inner.h_min()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.area()
    }

    /// Content hash of vertices and connectivity.
    #[getter]
    fn hash(&self) -> String {
        self.inner.hash_hex()
    }

    fn write_vtk(&self, path: PathBuf) -> PyResult<()> {
        ms::vtk::write(path, &self.inner, "mesh", &Default::default()).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, triangles={}, h_max={:.4})", self.n_vertices(), self.n_triangles(), self.h_max())
    }
}

/// Viscosity and Smagorinsky parameters.
#[pyclass(name = "ModelParams", module = "shearlab", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyModelParams {
    inner: ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (nu, cs=0.0, delta=0.0, speed=1.0, length=1.0))]
    fn new(nu: f64, cs: f64, delta: f64, speed: f64, length: f64) -> PyResult<Self> {
        Ok(PyModelParams { inner: ModelParams::new(nu, cs, delta, speed, length).map_err(to_py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (re, cs=0.0, delta=0.0, speed=1.0, length=1.0))]
    fn from_reynolds(re: f64, cs: f64, delta: f64, speed: f64, length: f64) -> PyResult<Self> {
        let inner = ModelParams::from_reynolds(re, speed, length, cs, delta).map_err(to_py_err)?;
        Ok(PyModelParams { inner })
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu
    }

    #[getter]
    fn re(&self) -> f64 {
        self.inner.re()
    }

    #[getter]
    fn cs_delta(&self) -> f64 {
        self.inner.cs_delta()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("ModelParams(nu={}, cs={}, delta={}, U={}, L={})", p.nu, p.cs, p.delta, p.u_ref, p.length)
    }
}

fn drive(name: &str, speed: f64) -> PyResult<BoundaryData> {
    match name {
        "zero" => Ok(BoundaryData::Zero),
        "couette" => Ok(BoundaryData::Couette { speed }),
        "rotating-outer" => Ok(BoundaryData::RotatingOuter { speed }),
        other => Err(PyValueError::new_err(format!("unknown drive {other:?}; use zero, couette or rotating-outer"))),
    }
}

/// Backward-Euler Taylor–Hood integrator holding the current state.
#[pyclass(name = "Simulation", module = "shearlab", unsendable)]
struct PySimulation {
    integ: Integrator,
    state: FlowState,
    stepping: TimeSteppingConfig,
}

#[pymethods]
impl PySimulation {
    /// Starts from the steady Stokes solution of the boundary data.
    #[new]
    #[pyo3(signature = (mesh, params, drive="zero", speed=1.0, dt=0.01))]
    fn new(mesh: &PyMesh, params: &PyModelParams, drive: &str, speed: f64, dt: f64) -> PyResult<Self> {
        let space = MixedSpace::new(mesh.inner.clone()).map_err(to_py_err)?;
        let mut integ = Integrator::new(space, params.inner, self::drive(drive, speed)?).map_err(to_py_err)?;
        let state = integ.solve_stokes(0.0).map_err(to_py_err)?;
        Ok(PySimulation { integ, state, stepping: TimeSteppingConfig::new(dt, f64::MAX) })
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.t
    }

    /// Velocity coefficients, x components first.
    #[getter]
    fn velocity(&self) -> Vec<f64> {
        self.state.u.clone()
    }

    /// Advances `n` steps; returns the Picard iteration count of the last one.
    #[pyo3(signature = (n=1))]
    fn step(&mut self, n: usize) -> PyResult<usize> {
        let mut last = 0;
        for _ in 0..n {
            let (next, report) = self.integ.step(&self.state, &self.stepping).map_err(to_py_err)?;
            self.state = next;
            last = report.picard_iterations;
        }
        Ok(last)
    }

    /// Instantaneous dissipation rate per unit area.
    fn dissipation(&self) -> PyResult<f64> {
        stats::dissipation_rate(self.integ.space(), self.integ.forms(), &self.state, self.integ.params())
            .map_err(to_py_err)
    }

    /// Kinetic energy per unit area.
    fn kinetic_energy(&self) -> PyResult<f64> {
        stats::kinetic_energy(self.integ.space(), self.integ.forms(), &self.state).map_err(to_py_err)
    }

    fn divergence_residual(&self) -> f64 {
        shearlab::solver::divergence_residual(self.integ.space(), self.integ.forms(), &self.state.u)
    }

    fn write_vtk(&self, path: PathBuf) -> PyResult<()> {
        shearlab::solver::write_snapshot(path, self.integ.space(), &self.state).map_err(to_py_err)
    }
}

/// Bound report at one parameter point; `under_resolved` is None when cs·delta = 0.
#[pyfunction]
#[pyo3(signature = (re, h, cs, delta=None, length=1.0, speed=1.0, c=1.0))]
fn bounds(py: Python<'_>, re: f64, h: f64, cs: f64, delta: Option<f64>, length: f64, speed: f64, c: f64) -> PyResult<Py<PyAny>> {
    let inputs = BoundInputs { re, h, cs, delta: delta.unwrap_or(h), length, u_ref: speed, c };
    to_dict(py, &ex::point_bounds(&inputs).map_err(to_py_err)?)
}

/// Region label (I to IV) and the index of the dominant term.
#[pyfunction]
#[pyo3(signature = (h, cs_delta, re, length=1.0))]
fn classify_region(h: f64, cs_delta: f64, re: f64, length: f64) -> PyResult<(String, u8)> {
    let (region, dominant) = bd::classify_region(h, cs_delta, re, length).map_err(to_py_err)?;
    Ok((region.to_string(), dominant))
}

/// `(zeta1, zeta2, zeta3)` at `h/L`.
#[pyfunction]
#[pyo3(signature = (re, h_over_l, length=1.0))]
fn level_sets(re: f64, h_over_l: f64, length: f64) -> PyResult<(f64, f64, f64)> {
    let z = bd::zeta_curves(re, length, &[h_over_l]).map_err(to_py_err)?[0];
    Ok((z.zeta1, z.zeta2, z.zeta3))
}

/// Minimizer of the bound over `C_s` with `delta = h`.
#[pyfunction]
fn minimize_cs(py: Python<'_>, re: f64, h_over_l: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &bd::minimize_cor1(re, h_over_l).map_err(to_py_err)?)
}

/// Minimizer of the bound over `C_s delta` at fixed `h`.
#[pyfunction]
#[pyo3(signature = (re, h, length=1.0))]
fn minimize_cs_delta(py: Python<'_>, re: f64, h: f64, length: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &bd::minimize_cor2(re, h, length).map_err(to_py_err)?)
}

/// Runs the self-check suite.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn verify(py: Python<'_>, seed: u64) -> PyResult<Py<PyAny>> {
    let report = py.detach(|| ex::cmd_verify(seed)).map_err(to_py_err)?;
    to_dict(py, &report)
}

/// Runs a TOML configuration and returns its summary.
#[pyfunction]
#[pyo3(signature = (config, out=None, seed=None, sequential=false))]
fn run(py: Python<'_>, config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, sequential: bool) -> PyResult<Py<PyAny>> {
    let opts = RunOptions { sequential };
    let result = py.detach(|| ex::cmd_run(&config, out.as_deref(), seed, opts)).map_err(to_py_err)?;
    to_dict(py, &result.summary)
}

#[pymodule]
#[pyo3(name = "shearlab")]
fn shearlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(classify_region, m)?)?;
    m.add_function(wrap_pyfunction!(level_sets, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_cs, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_cs_delta, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
