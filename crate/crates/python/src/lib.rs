//! Python bindings: surface families, instances, the Abel–Jacobi map and
//! its checks, the Neumann system, and the report-producing commands.
//!
//! Surface points cross the boundary as `(x, y, z)` tuples of complex
//! numbers.

use hyperint::abel_jacobi::abel_jacobi;
use hyperint::checks::lemniscate_oracle;
use hyperint::config::{FamilySpec, RunConfig};
use hyperint::instances::{random_instance, Instance};
use hyperint::neumann::{self, NeumannParams, NeumannState};
use hyperint::ode::OdeSettings;
use hyperint::riemann::QuadratureSettings;
use hyperint::rng::SplitMix64;
use hyperint::runner::{run_flow, run_interp, run_neumann, run_periods, run_verify, RunOptions};
use hyperint::surface::{Configuration, SurfaceFamily, SurfacePoint};
use hyperint::symplectic::{canonical_residual, integrate_flow, involutivity_residual};
use hyperint::Error;
use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Point = (C64, C64, C64);

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn config_of(points: &[Point]) -> Configuration {
    Configuration::new(points.iter().map(|&(x, y, z)| SurfacePoint::new(x, y, z)).collect())
}

fn points_of(config: &Configuration) -> Vec<Point> {
    config.points.iter().map(|p| (p.x, p.y, p.z)).collect()
}

fn quad(rel_tol: f64) -> QuadratureSettings {
    QuadratureSettings {
        rel_tol,
        ..QuadratureSettings::default()
    }
}

/// A surface family with its coefficients fixed.
#[pyclass(name = "Family", module = "hyperint", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFamily {
    inner: SurfaceFamily,
}

#[pymethods]
impl PyFamily {
    /// Family from a JSON spec such as `{"kind": "elliptic_k3"}`. Omitted
    /// coefficients are drawn from `seed`.
    #[staticmethod]
    #[pyo3(signature = (spec, seed = 0))]
    fn from_json(spec: &str, seed: u64) -> PyResult<Self> {
        let spec: FamilySpec = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let inner = spec.resolve(&mut SplitMix64::new(seed)).map_err(to_py)?;
        Ok(PyFamily { inner })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn genus(&self) -> usize {
        self.inner.genus()
    }

    /// Branch points of the cut curve over `u`.
    fn branch_points(&self, u: Vec<C64>) -> PyResult<Vec<C64>> {
        Ok(self.inner.cut_curve(&u).map_err(to_py)?.branch_points().to_vec())
    }

    /// Coefficients of the section polynomial, constant term first.
    fn section(&self, u: Vec<C64>) -> PyResult<Vec<C64>> {
        Ok(self.inner.section_polynomial(&u).map_err(to_py)?.coeffs().to_vec())
    }

    fn lift_points(&self, u: Vec<C64>, xs: Vec<C64>, signs: Vec<f64>) -> PyResult<Vec<Point>> {
        Ok(points_of(&self.inner.lift_points(&u, &xs, &signs).map_err(to_py)?))
    }

    /// The `u` whose section passes through the points.
    fn points_to_u(&self, points: Vec<Point>) -> PyResult<Vec<C64>> {
        self.inner.points_to_u(&config_of(&points)).map_err(to_py)
    }

    fn surface_residual(&self, point: Point) -> f64 {
        self.inner.surface_residual(&SurfacePoint::new(point.0, point.1, point.2))
    }

    /// `ψ` of the points, as a path sum from the base point at infinity.
    #[pyo3(signature = (u, points, rel_tol = 1e-10))]
    fn abel_jacobi(&self, u: Vec<C64>, points: Vec<Point>, rel_tol: f64) -> PyResult<Vec<C64>> {
        let img = abel_jacobi(&self.inner, &u, &config_of(&points), &quad(rel_tol)).map_err(to_py)?;
        Ok(img.psi)
    }

    #[pyo3(signature = (u, points, h = 1e-5, rel_tol = 1e-10))]
    fn canonical_residual(&self, u: Vec<C64>, points: Vec<Point>, h: f64, rel_tol: f64) -> PyResult<f64> {
        canonical_residual(&self.inner, &u, &config_of(&points), h, &quad(rel_tol)).map_err(to_py)
    }

    #[pyo3(signature = (points, h = 1e-5))]
    fn involutivity_residual(&self, points: Vec<Point>, h: f64) -> PyResult<f64> {
        involutivity_residual(&self.inner, &config_of(&points), h).map_err(to_py)
    }

    /// Flow of `u_m` (`m` from 1) for time `t`: a dict of `times`, `u`, `psi`
    /// and `points`.
    #[pyo3(signature = (points, m, t, samples = 10))]
    fn flow<'py>(
        &self,
        py: Python<'py>,
        points: Vec<Point>,
        m: usize,
        t: f64,
        samples: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        if m == 0 {
            return Err(PyValueError::new_err("m counts from 1"));
        }
        let traj = integrate_flow(
            &self.inner,
            &config_of(&points),
            m - 1,
            t,
            samples,
            &OdeSettings::default(),
            &QuadratureSettings::default(),
        )
        .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("times", traj.times.clone())?;
        d.set_item("u", traj.u_series.clone())?;
        d.set_item("psi", traj.psi_series.clone())?;
        d.set_item("points", traj.states.iter().map(points_of).collect::<Vec<_>>())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Family({}, genus {})", self.inner.name(), self.inner.genus())
    }
}

/// A family with `u` and `g` points on its surface in general position.
#[pyclass(name = "Instance", module = "hyperint", frozen)]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    /// Random instance of `family` drawn from `seed`.
    #[staticmethod]
    fn random(family: &PyFamily, seed: u64) -> PyResult<Self> {
        let inner = random_instance(&family.inner, &mut SplitMix64::new(seed)).map_err(to_py)?;
        Ok(PyInstance { inner })
    }

    #[getter]
    fn family(&self) -> PyFamily {
        PyFamily {
            inner: self.inner.family.clone(),
        }
    }

    #[getter]
    fn u(&self) -> Vec<C64> {
        self.inner.u.clone()
    }

    #[getter]
    fn points(&self) -> Vec<Point> {
        points_of(&self.inner.config)
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }
}

/// The Neumann system on the sphere of radius `r` with constants `c`.
#[pyclass(name = "Neumann", module = "hyperint", frozen)]
struct PyNeumann {
    params: NeumannParams,
}

fn state(q: Vec<f64>, p: Vec<f64>) -> NeumannState {
    NeumannState { q, p }
}

#[pymethods]
impl PyNeumann {
    #[new]
    #[pyo3(signature = (c, r = 1.0))]
    fn new(c: Vec<f64>, r: f64) -> PyResult<Self> {
        Ok(PyNeumann {
            params: NeumannParams::new(c, r).map_err(to_py)?,
        })
    }

    #[getter]
    fn family(&self) -> PyFamily {
        PyFamily {
            inner: self.params.family(),
        }
    }

    /// Random state `(q, p)` on the constraint manifold with `|p| = speed`.
    #[pyo3(signature = (seed, speed = 1.0))]
    fn random_state(&self, seed: u64, speed: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let s = neumann::random_state(&self.params, &mut SplitMix64::new(seed), speed).map_err(to_py)?;
        Ok((s.q, s.p))
    }

    fn energy(&self, q: Vec<f64>, p: Vec<f64>) -> f64 {
        neumann::energy(&self.params, &state(q, p))
    }

    /// The Uhlenbeck integrals `F_n`.
    fn integrals(&self, q: Vec<f64>, p: Vec<f64>) -> Vec<f64> {
        neumann::uhlenbeck_integrals(&self.params, &state(q, p))
    }

    /// The `u` of the spectral curve of the state.
    fn spectral_u(&self, q: Vec<f64>, p: Vec<f64>) -> PyResult<Vec<C64>> {
        Ok(neumann::spectral_data(&self.params, &state(q, p)).map_err(to_py)?.1)
    }

    /// Separated points of the state on the Neumann surface.
    fn separated_points(&self, q: Vec<f64>, p: Vec<f64>) -> PyResult<Vec<Point>> {
        let sep = neumann::separated_points(&self.params, &state(q, p)).map_err(to_py)?;
        Ok(points_of(&sep.config))
    }

    /// `H(u)` on the spectral side.
    fn hamiltonian_of_u(&self, u: Vec<C64>) -> PyResult<C64> {
        neumann::hamiltonian_of_u(&self.params, &u).map_err(to_py)
    }

    /// Mechanical motion sampled `samples` times over `[0, t]`, as lists of
    /// `(q, p)` with their times.
    #[pyo3(signature = (q, p, t, samples = 10))]
    fn integrate(
        &self,
        q: Vec<f64>,
        p: Vec<f64>,
        t: f64,
        samples: usize,
    ) -> PyResult<(Vec<f64>, Vec<(Vec<f64>, Vec<f64>)>)> {
        let traj = neumann::integrate(
            &self.params,
            &state(q, p),
            t,
            samples,
            &neumann::default_ode_settings(),
        )
        .map_err(to_py)?;
        let states = traj.states.into_iter().map(|s| (s.q, s.p)).collect();
        Ok((traj.times, states))
    }
}

/// Run a command (`verify`, `flow`, `periods`, `interp`, `neumann`) on a
/// JSON config and return the report as a dict.
#[pyfunction]
#[pyo3(signature = (command, config, workers = 0, tol_scale = 1.0))]
fn run<'py>(py: Python<'py>, command: &str, config: &str, workers: usize, tol_scale: f64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig::from_json(config).map_err(to_py)?;
    let opts = RunOptions { workers, tol_scale };
    let report = py
        .detach(|| match command {
            "verify" => run_verify(&cfg, &opts),
            "flow" => run_flow(&cfg, &opts).map(|r| r.0),
            "periods" => run_periods(&cfg, &opts),
            "interp" => run_interp(&cfg, &opts),
            "neumann" => run_neumann(&cfg, &opts).map(|r| r.0),
            other => Err(Error::InvalidArgument(format!("unknown command {other}"))),
        })
        .map_err(to_py)?;
    py.import("json")?.call_method1("loads", (report.to_json(),))
}

/// `∫_{-1}^{1} dx / sqrt(1 - x⁴)` from the arithmetic-geometric mean.
#[pyfunction]
fn lemniscate() -> f64 {
    lemniscate_oracle()
}

#[pymodule]
#[pyo3(name = "hyperint")]
fn hyperint_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyNeumann>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(lemniscate, m)?)?;
    Ok(())
}
