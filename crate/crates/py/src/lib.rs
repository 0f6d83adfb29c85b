//! Python bindings: STL formulas and rewards, the benchmark simulators,
//! trained agents, and the train / evaluate / verify commands.

use std::path::PathBuf;

use asap_phi::env::{Benchmark, Env as CoreEnv, EnvSpec, Task};
use asap_phi::eval::tabular::{run_suite, SuiteConfig};
use asap_phi::eval::EvalReport;
use asap_phi::rl::{Agent as CoreAgent, Policy};
use asap_phi::stl::{boolean_sat, first_sat_time, parse_formula, Formula as CoreFormula, Monitor, Trace};
use asap_phi_cli::{cmd_eval, cmd_train, CliError};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: CliError) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_trace(states: Vec<Vec<f64>>) -> PyResult<Trace> {
    Trace::new(&states).map_err(value_err)
}

/// A parsed STL formula over states `x0 .. x{state_dim-1}`.
#[pyclass(module = "asap_phi_py", frozen)]
struct Formula {
    inner: CoreFormula,
}

#[pymethods]
impl Formula {
    #[new]
    fn new(text: &str, state_dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: parse_formula(text, state_dim).map_err(value_err)?,
        })
    }

    /// Robustness at time `t` of a trace given as a list of states.
    #[pyo3(signature = (trace, t = 0))]
    fn robustness(&self, trace: Vec<Vec<f64>>, t: usize) -> PyResult<f64> {
        let tr = to_trace(trace)?;
        Monitor::new(&self.inner).robustness(&tr, t).map_err(value_err)
    }

    /// Robustness at every time; `None` where the formula runs past the end.
    fn robustness_all(&self, trace: Vec<Vec<f64>>) -> PyResult<Vec<Option<f64>>> {
        let tr = to_trace(trace)?;
        Ok(Monitor::new(&self.inner)
            .robustness_all(&tr)
            .into_iter()
            .map(Result::ok)
            .collect())
    }

    #[pyo3(signature = (trace, t = 0))]
    fn sat(&self, trace: Vec<Vec<f64>>, t: usize) -> PyResult<bool> {
        boolean_sat(&to_trace(trace)?, t, &self.inner).map_err(value_err)
    }

    /// Earliest satisfying time, or `None` if the formula never holds.
    fn first_sat_time(&self, trace: Vec<Vec<f64>>) -> PyResult<Option<usize>> {
        Ok(first_sat_time(&to_trace(trace)?, &self.inner))
    }

    /// `r_sat` when the formula holds at `t`, otherwise its robustness.
    fn reward_asap(&self, trace: Vec<Vec<f64>>, t: usize, r_sat: f64) -> PyResult<f64> {
        asap_phi::reward::reward_asap(&to_trace(trace)?, t, &self.inner, r_sat).map_err(value_err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", self.inner.to_string())
    }
}

/// Smallest satisfaction reward that makes earlier satisfaction strictly
/// more valuable over episodes of at most `k_max` steps.
#[pyfunction]
#[pyo3(signature = (rho_min, rho_max, k_max, margin = 1.0))]
fn choose_r_sat(rho_min: f64, rho_max: f64, k_max: usize, margin: f64) -> PyResult<f64> {
    asap_phi::reward::choose_r_sat(rho_min, rho_max, k_max, margin).map_err(value_err)
}

/// One benchmark simulator with its preset target and unsafe sets.
#[pyclass(module = "asap_phi_py")]
struct Env {
    inner: CoreEnv,
}

#[pymethods]
impl Env {
    #[new]
    #[pyo3(signature = (name, task = "reach", seed = 0))]
    fn new(name: &str, task: &str, seed: u64) -> PyResult<Self> {
        let bench: Benchmark = name.parse().map_err(value_err)?;
        let task: Task = task.parse().map_err(value_err)?;
        let spec = EnvSpec::preset(bench, task).map_err(value_err)?;
        Ok(Self {
            inner: CoreEnv::new(spec, seed).map_err(value_err)?,
        })
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.spec().state_dim()
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.spec().action_dim()
    }

    #[getter]
    fn state(&self) -> Vec<f64> {
        self.inner.state().to_vec()
    }

    #[getter]
    fn target_formula(&self) -> String {
        self.inner.spec().phi_target_text()
    }

    #[getter]
    fn unsafe_formula(&self) -> Option<String> {
        self.inner.spec().phi_unsafe_text()
    }

    /// Resets to `state`, or to a uniform draw from the initial box.
    #[pyo3(signature = (state = None))]
    fn reset(&mut self, state: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        let s = match state {
            Some(s) => self.inner.reset(&s).map_err(value_err)?,
            None => self.inner.reset_random(),
        };
        Ok(s.state)
    }

    /// Applies one action, clipped to the action box, and returns the next state.
    fn step(&mut self, action: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.step(&action).map(<[f64]>::to_vec).map_err(value_err)
    }
}

/// A trained actor loaded from a checkpoint.
#[pyclass(module = "asap_phi_py", frozen)]
struct Agent {
    inner: CoreAgent,
}

#[pymethods]
impl Agent {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| value_err(format!("{}: {e}", path.display())))?;
        Ok(Self {
            inner: CoreAgent::from_json(&text).map_err(value_err)?,
        })
    }

    /// Deterministic action for `state`.
    fn act(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.action(&state).map_err(value_err)
    }
}

fn report_dicts<'py>(py: Python<'py>, reports: &[EvalReport]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    reports
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("task", r.task.to_string())?;
            d.set_item("tolerance", r.tolerance)?;
            d.set_item("n_points", r.n_points)?;
            d.set_item("success_rate", r.success_rate)?;
            d.set_item("violation_rate", r.violation_rate)?;
            d.set_item("mean_steps", r.mean_steps)?;
            d.set_item("median_steps", r.median_steps)?;
            Ok(d)
        })
        .collect()
}

/// Trains from a run configuration into `out` and returns the final
/// evaluation reports.
#[pyfunction]
#[pyo3(signature = (config, out, overrides = Vec::new(), seed = None))]
fn train<'py>(
    py: Python<'py>,
    config: PathBuf,
    out: PathBuf,
    overrides: Vec<String>,
    seed: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let summary = py
        .detach(|| cmd_train(&config, seed, Some(&out), &overrides, &mut std::io::sink()))
        .map_err(cli_err)?;
    report_dicts(py, &summary.reports)
}

/// Evaluates a run directory or checkpoint; reports are also written to disk.
#[pyfunction]
#[pyo3(signature = (input, config = None, out = None, overrides = Vec::new()))]
fn evaluate<'py>(
    py: Python<'py>,
    input: PathBuf,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    overrides: Vec<String>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = py
        .detach(|| {
            cmd_eval(
                &input,
                config.as_deref(),
                out.as_deref(),
                &overrides,
                &mut std::io::sink(),
            )
        })
        .map_err(cli_err)?;
    report_dicts(py, &reports)
}

/// Runs the tabular ordering suite; returns the number of failures.
#[pyfunction]
#[pyo3(signature = (seed = 0, mdps = 100))]
fn verify(py: Python<'_>, seed: u64, mdps: usize) -> PyResult<usize> {
    let cfg = SuiteConfig {
        seed,
        mdps,
        ..SuiteConfig::default()
    };
    let report = py.detach(|| run_suite(&cfg)).map_err(value_err)?;
    Ok(report.failures.len())
}

#[pymodule]
fn asap_phi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Formula>()?;
    m.add_class::<Env>()?;
    m.add_class::<Agent>()?;
    m.add_function(wrap_pyfunction!(choose_r_sat, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("__version__", asap_phi_cli::VERSION)?;
    Ok(())
}
