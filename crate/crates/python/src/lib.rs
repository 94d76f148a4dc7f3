use ppweno::harness::{builtin, convergence_study, run_case, CaseDefinition, RunResult, BUILTIN_NAMES};
use ppweno::io::{write_run, IoError};
use ppweno::limiter;
use ppweno::physics::{IdealGas, Model};
use ppweno::weno::{self, Side};
use ppweno::SolverError;
use pyo3::exceptions::{PyKeyError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn solver_err(e: SolverError) -> PyErr {
    match e {
        SolverError::Config(msg) => PyValueError::new_err(msg),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn io_err(e: IoError) -> PyErr {
    match e {
        IoError::UnknownCase(_) => PyKeyError::new_err(e.to_string()),
        IoError::Config(_) => PyValueError::new_err(e.to_string()),
        IoError::Filesystem { .. } => PyOSError::new_err(e.to_string()),
        IoError::Solver(s) => solver_err(s),
    }
}

/// A benchmark case definition.
#[pyclass(name = "Case", module = "ppweno_py", skip_from_py_object)]
#[derive(Clone)]
struct PyCase {
    inner: CaseDefinition,
}

#[pymethods]
impl PyCase {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        builtin(name)
            .map(|inner| PyCase { inner })
            .ok_or_else(|| io_err(IoError::UnknownCase(name.to_string())))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CaseDefinition::from_json(text).map(|inner| PyCase { inner }).map_err(solver_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn description(&self) -> String {
        self.inner.description.clone()
    }

    #[getter]
    fn two_d(&self) -> bool {
        self.inner.domain.is_2d()
    }

    #[getter]
    fn get_n(&self) -> usize {
        self.inner.n
    }

    #[setter]
    fn set_n(&mut self, n: usize) {
        self.inner.n = n;
    }

    #[getter]
    fn get_t_end(&self) -> f64 {
        self.inner.t_end
    }

    #[setter]
    fn set_t_end(&mut self, t: f64) {
        self.inner.t_end = t;
    }

    #[getter]
    fn get_cfl(&self) -> f64 {
        self.inner.cfl
    }

    #[setter]
    fn set_cfl(&mut self, c: f64) {
        self.inner.cfl = c;
    }

    #[getter]
    fn get_limiter(&self) -> bool {
        self.inner.limiter
    }

    #[setter]
    fn set_limiter(&mut self, on: bool) {
        self.inner.limiter = on;
    }

    #[getter]
    fn get_eps_weno(&self) -> f64 {
        self.inner.weno.eps
    }

    #[setter]
    fn set_eps_weno(&mut self, eps: f64) {
        self.inner.weno.eps = eps;
    }

    /// Run the case on `n` cells along x (the case default when omitted).
    #[pyo3(signature = (n=None))]
    fn run(&self, py: Python<'_>, n: Option<usize>) -> PyResult<PyRunResult> {
        let case = self.inner.clone();
        let res = py.detach(move || run_case(&case, n, &mut |_| {})).map_err(solver_err)?;
        Ok(PyRunResult { inner: res })
    }

    /// Convergence table over a doubling grid sequence, one dict per grid.
    fn converge<'py>(&self, py: Python<'py>, grids: Vec<usize>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let case = self.inner.clone();
        let report = py
            .detach(move || convergence_study(&case, &grids, &mut |_, _| {}))
            .map_err(solver_err)?;
        report
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("n", r.n)?;
                d.set_item("l1", r.l1)?;
                d.set_item("l1_mean", r.l1_mean)?;
                d.set_item("l1_order", r.l1_order)?;
                d.set_item("linf", r.linf)?;
                d.set_item("linf_order", r.linf_order)?;
                d.set_item("min_value", r.min_value)?;
                d.set_item("max_value", r.max_value)?;
                d.set_item("upper_gap", r.upper_gap)?;
                d.set_item("min_pressure", r.min_pressure)?;
                d.set_item("steps", r.steps)?;
                d.set_item("limited_faces", r.limited_faces)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Case('{}', n={}, t_end={})", self.inner.name, self.inner.n, self.inner.t_end)
    }
}

/// Final fields and step log of one run.
#[pyclass(name = "RunResult", module = "ppweno_py")]
struct PyRunResult {
    inner: RunResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.cells.iter().map(|c| c.x).collect()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.cells.iter().map(|c| c.y).collect()
    }

    /// Solution value for scalar cases, density otherwise.
    #[getter]
    fn density(&self) -> Vec<f64> {
        self.inner.cells.iter().map(|c| c.density).collect()
    }

    #[getter]
    fn velocity(&self) -> Vec<(f64, f64)> {
        self.inner.cells.iter().map(|c| (c.velocity[0], c.velocity[1])).collect()
    }

    #[getter]
    fn pressure(&self) -> Option<Vec<f64>> {
        self.inner.cells.iter().map(|c| c.pressure).collect()
    }

    /// Conserved variables per cell.
    #[getter]
    fn state(&self) -> Vec<Vec<f64>> {
        self.inner.cells.iter().map(|c| c.state.clone()).collect()
    }

    #[getter]
    fn min_density(&self) -> f64 {
        self.inner.min_density()
    }

    #[getter]
    fn max_density(&self) -> f64 {
        self.inner.max_density()
    }

    #[getter]
    fn min_pressure(&self) -> Option<f64> {
        self.inner.min_pressure()
    }

    #[getter]
    fn limiter_activations(&self) -> usize {
        self.inner.limiter_activations()
    }

    /// `(l1, l1_mean, linf)` against the exact solution, if the case has one.
    #[getter]
    fn norms(&self) -> Option<(f64, f64, f64)> {
        self.inner.norms.map(|n| (n.l1, n.l1_mean, n.linf))
    }

    #[getter]
    fn steplog<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .log
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("step", r.step)?;
                d.set_item("time", r.time)?;
                d.set_item("dt", r.dt)?;
                d.set_item("limited_faces", r.limited_faces)?;
                d.set_item("min_theta", r.min_theta)?;
                d.set_item("min_density", r.min_density)?;
                d.set_item("min_thermal", r.min_thermal)?;
                d.set_item("density_floor", r.floors.density)?;
                d.set_item("thermal_floor", r.floors.thermal)?;
                Ok(d)
            })
            .collect()
    }

    /// Write the CSV files of this run into `dir`; returns the paths.
    fn write(&self, dir: &str) -> PyResult<Vec<String>> {
        let paths = write_run(std::path::Path::new(dir), &self.inner).map_err(io_err)?;
        Ok(paths.into_iter().map(|p| p.display().to_string()).collect())
    }
}

#[pyfunction]
fn list_cases() -> Vec<&'static str> {
    BUILTIN_NAMES.to_vec()
}

/// WENO5 value at `i + 1/2` from five point values.
#[pyfunction]
#[pyo3(signature = (values, right=false, eps=1e-6))]
fn weno5_face(values: [f64; 5], right: bool, eps: f64) -> f64 {
    weno::weno5_face(values, if right { Side::Right } else { Side::Left }, eps)
}

/// Global Lax-Friedrichs split `(f+, f-)`.
#[pyfunction]
fn lxf_split(u: Vec<f64>, f: Vec<f64>, alpha: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = weno::lxf_split(&u, &f, alpha).map_err(solver_err)?;
    Ok((s.plus, s.minus))
}

#[pyfunction]
fn mpp_bounds_max(
    u: f64,
    u_max: f64,
    lam: f64,
    f_minus: f64,
    f_plus: f64,
    h_minus: f64,
    h_plus: f64,
) -> PyResult<(f64, f64)> {
    limiter::mpp_bounds_max(u, u_max, lam, f_minus, f_plus, h_minus, h_plus).map_err(solver_err)
}

#[pyfunction]
#[pyo3(signature = (u, u_min, lam, f_minus, f_plus, h_minus, h_plus, dt_source=0.0))]
#[allow(clippy::too_many_arguments)]
fn mpp_bounds_min(
    u: f64,
    u_min: f64,
    lam: f64,
    f_minus: f64,
    f_plus: f64,
    h_minus: f64,
    h_plus: f64,
    dt_source: f64,
) -> PyResult<(f64, f64)> {
    limiter::mpp_bounds_min(u, u_min, lam, f_minus, f_plus, h_minus, h_plus, dt_source).map_err(solver_err)
}

#[pyfunction]
fn decouple_rectangle_1d(b1: [f64; 2], b2: [f64; 2], b3: [f64; 2]) -> (f64, f64) {
    limiter::decouple_rectangle_1d(b1, b2, b3)
}

/// Pressure of a 2D ideal-gas state `(rho, m, n, E)`.
#[pyfunction]
fn ideal_pressure(gamma: f64, state: [f64; 4]) -> PyResult<f64> {
    let g = IdealGas::new(gamma);
    Model::<4>::thermal(&g, &state).ok_or_else(|| PyValueError::new_err("no pressure"))
}

/// Largest `r` in `[0, 1]` with `p(base + r dir) >= floor` for a 2D ideal gas.
#[pyfunction]
fn scale_pressure_to_floor(gamma: f64, base: [f64; 4], dir: [f64; 4], floor: f64) -> PyResult<f64> {
    let g = IdealGas::new(gamma);
    limiter::scale_to_floor::<4>(&g, &base, &dir, floor).map_err(solver_err)
}

#[pymodule]
fn ppweno_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCase>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(list_cases, m)?)?;
    m.add_function(wrap_pyfunction!(weno5_face, m)?)?;
    m.add_function(wrap_pyfunction!(lxf_split, m)?)?;
    m.add_function(wrap_pyfunction!(mpp_bounds_max, m)?)?;
    m.add_function(wrap_pyfunction!(mpp_bounds_min, m)?)?;
    m.add_function(wrap_pyfunction!(decouple_rectangle_1d, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(scale_pressure_to_floor, m)?)?;
    Ok(())
}
