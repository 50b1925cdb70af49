//! Python bindings: load cases, build and export the model, solve with either
//! backend, validate schedules and produce the restoration reports.

use std::collections::BTreeMap;

use blackstart::analysis::{self, Backend, SweepAxis, SweepSpec};
use blackstart::case::{self, GridCase};
use blackstart::milp::{self, MilpModel};
use blackstart::schedule::Schedule;
use blackstart::solver::{self, EnumLimits, SolveStatus, SolverCommand};
use blackstart::validate::{self as checks, ChainElement};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyclass(name = "Case", frozen)]
struct PyCase {
    inner: GridCase,
}

#[pymethods]
impl PyCase {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        case::load_case_json(text).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        case::load_case_file(path).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Canonical document with every default made explicit.
    fn to_json(&self) -> String {
        self.inner.to_document().to_json()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps()
    }

    #[getter]
    fn step_minutes(&self) -> u32 {
        self.inner.time.step_minutes
    }

    #[getter]
    fn bus_ids(&self) -> Vec<String> {
        self.inner.buses.iter().map(|b| b.id.clone()).collect()
    }

    #[getter]
    fn generator_ids(&self) -> Vec<String> {
        self.inner.generators.iter().map(|g| g.id.clone()).collect()
    }

    fn bus_importance(&self) -> BTreeMap<String, f64> {
        case::bus_importance_from_degree(&self.inner)
    }

    fn battery_variant(&self) -> Self {
        Self {
            inner: analysis::battery_variant(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Case(buses={}, branches={}, generators={}, fuel_cells={}, batteries={}, n_steps={})",
            self.inner.buses.len(),
            self.inner.branches.len(),
            self.inner.generators.len(),
            self.inner.fuel_cells.len(),
            self.inner.batteries.len(),
            self.inner.n_steps()
        )
    }
}

#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: MilpModel,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn n_variables(&self) -> usize {
        self.inner.variables.len()
    }

    #[getter]
    fn n_constraints(&self) -> usize {
        self.inner.constraints.len()
    }

    fn variable_names(&self) -> Vec<String> {
        (0..self.inner.variables.len())
            .map(|j| self.inner.var_name(j).to_string())
            .collect()
    }

    fn constraint_names(&self) -> Vec<String> {
        self.inner.constraints.iter().map(|c| c.name.clone()).collect()
    }

    fn to_mps(&self) -> String {
        solver::export_mps(&self.inner)
    }

    #[staticmethod]
    fn from_mps(text: &str) -> PyResult<Self> {
        solver::import_mps(text).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Objective value of a full assignment given as `{name: value}`.
    fn objective(&self, values: BTreeMap<String, f64>) -> PyResult<f64> {
        let mut x = vec![0.0; self.inner.variables.len()];
        for (name, v) in values {
            let j = self
                .inner
                .index_of(&name)
                .ok_or_else(|| value_err(format!("unknown variable `{name}`")))?;
            x[j] = v;
        }
        Ok(self.inner.evaluate_objective(&milp::Assignment(x)))
    }
}

#[pyclass(name = "Schedule", frozen)]
struct PySchedule {
    inner: Schedule,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Schedule::from_json(text).map(|inner| Self { inner }).map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Start step per generator, `None` for never.
    fn generator_starts(&self) -> BTreeMap<String, Option<usize>> {
        self.inner
            .generators
            .iter()
            .map(|d| (d.id.clone(), d.start))
            .collect()
    }

    /// First energized step per bus, `None` for never.
    fn bus_energization(&self) -> BTreeMap<String, Option<usize>> {
        self.inner
            .buses
            .iter()
            .map(|b| (b.id.clone(), b.first_on()))
            .collect()
    }
}

#[pyclass(name = "SolveResult", frozen)]
struct PySolveResult {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    objective: Option<f64>,
    #[pyo3(get)]
    wall_seconds: f64,
    #[pyo3(get)]
    message: Option<String>,
    schedule: Option<Schedule>,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn schedule(&self) -> Option<PySchedule> {
        self.schedule.clone().map(|inner| PySchedule { inner })
    }

    fn __repr__(&self) -> String {
        format!("SolveResult(status={:?}, objective={:?})", self.status, self.objective)
    }
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Feasible => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Error => "error",
    }
}

fn make_backend(backend: &str, solver_cmd: Option<&str>, workers: Option<usize>) -> PyResult<Backend> {
    match backend {
        "enum" => Ok(Backend::Enumeration(EnumLimits {
            workers,
            ..EnumLimits::default()
        })),
        "external" => {
            let cmd = match solver_cmd {
                Some(t) => SolverCommand::parse(t),
                None => SolverCommand::from_env(),
            }
            .map_err(value_err)?;
            Ok(Backend::External(cmd))
        }
        other => Err(value_err(format!("unknown backend `{other}` (enum or external)"))),
    }
}

#[pyfunction]
fn encode(case: &PyCase) -> PyResult<PyModel> {
    milp::encode(&case.inner).map(|inner| PyModel { inner }).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (case, backend = "enum", solver_cmd = None, workers = None))]
fn solve(
    py: Python<'_>,
    case: &PyCase,
    backend: &str,
    solver_cmd: Option<&str>,
    workers: Option<usize>,
) -> PyResult<PySolveResult> {
    let backend = make_backend(backend, solver_cmd, workers)?;
    let result = py
        .detach(|| analysis::solve(&case.inner, &backend))
        .map_err(runtime_err)?;
    Ok(PySolveResult {
        status: status_name(result.status).to_string(),
        objective: result.objective,
        wall_seconds: result.stats.wall_seconds,
        message: result.message,
        schedule: result.schedule,
    })
}

/// Validation report as a dict: `pass`, `violations` (tag, entity, step,
/// message), `system_power`.
#[pyfunction]
fn validate<'py>(py: Python<'py>, case: &PyCase, schedule: &PySchedule) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let report = checks::validate(&case.inner, &schedule.inner).map_err(value_err)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("pass", report.pass)?;
    let violations: Vec<(String, String, Option<usize>, String)> = report
        .violations
        .into_iter()
        .map(|v| (v.tag, v.entity, v.step, v.message))
        .collect();
    out.set_item("violations", violations)?;
    out.set_item("system_power", report.system_power)?;
    Ok(out)
}

/// `(detected, total)` over the standard mutation set.
#[pyfunction]
fn mutation_suite(case: &PyCase, schedule: &PySchedule) -> PyResult<(usize, usize)> {
    let summary = checks::mutation_suite(&case.inner, &schedule.inner).map_err(value_err)?;
    Ok((summary.detections(), summary.mutations()))
}

/// Witness chain for a bus as `(kind, id, step)` tuples, outermost first.
#[pyfunction]
fn energization_chain(case: &PyCase, schedule: &PySchedule, bus: &str) -> PyResult<Vec<(String, String, usize)>> {
    let chain = checks::energization_chain(&case.inner, &schedule.inner, bus).map_err(value_err)?;
    Ok(chain
        .into_iter()
        .map(|l| {
            let kind = match l.element {
                ChainElement::Bus => "bus",
                ChainElement::Branch => "branch",
            };
            (kind.to_string(), l.id, l.step)
        })
        .collect())
}

/// `(rows, average)` with rows of `(generator, minutes or None)`.
#[pyfunction]
fn gsus_table(case: &PyCase, schedule: &PySchedule) -> (Vec<(String, Option<u32>)>, Option<f64>) {
    let t = analysis::gsus_table(&case.inner, &schedule.inner);
    (t.rows.into_iter().map(|r| (r.generator, r.minutes)).collect(), t.average)
}

#[pyfunction]
fn restored_power_csv(case: &PyCase, schedule: &PySchedule) -> String {
    analysis::restored_power_series(&case.inner, &schedule.inner).to_csv()
}

/// Runs a sweep and returns `(csv, averages)`.
#[pyfunction]
#[pyo3(signature = (case, axis, values, backend = "external", solver_cmd = None, workers = 1))]
fn sweep(
    py: Python<'_>,
    case: &PyCase,
    axis: &str,
    values: Vec<String>,
    backend: &str,
    solver_cmd: Option<&str>,
    workers: usize,
) -> PyResult<(String, Vec<Option<f64>>)> {
    let axis = SweepAxis::parse(axis).ok_or_else(|| value_err(format!("unknown axis `{axis}`")))?;
    let spec = SweepSpec {
        axis,
        values,
        backend: make_backend(backend, solver_cmd, None)?,
    };
    let table = py
        .detach(|| analysis::sweep(&case.inner, &spec, workers))
        .map_err(value_err)?;
    Ok((table.to_csv(), table.averages()))
}

#[pymodule]
#[pyo3(name = "blackstart")]
fn blackstart_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCase>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(mutation_suite, m)?)?;
    m.add_function(wrap_pyfunction!(energization_chain, m)?)?;
    m.add_function(wrap_pyfunction!(gsus_table, m)?)?;
    m.add_function(wrap_pyfunction!(restored_power_csv, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
