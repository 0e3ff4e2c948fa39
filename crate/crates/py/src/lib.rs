use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use coalition_core::harness::{self, GeneratorParams, Metrics};
use coalition_core::negotiation::{self, NegotiationConfig};
use coalition_core::AgentId;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed scenario: tasks, agents, capabilities, relationships and
/// preferences.
#[pyclass(name = "Scenario", module = "coalition")]
struct PyScenario {
    inner: coalition_core::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = coalition_core::Scenario::parse(text).map_err(value_error)?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Self::parse(&text)
    }

    #[staticmethod]
    #[pyo3(signature = (agents, tasks, density, seed=0))]
    fn generate(agents: usize, tasks: usize, density: f64, seed: u64) -> PyResult<Self> {
        let inner = harness::generate_random_scenario(&GeneratorParams::new(agents, tasks, density), seed)
            .map_err(value_error)?;
        Ok(PyScenario { inner })
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_error)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn agents(&self) -> Vec<String> {
        self.inner.agents.iter().map(|a| a.to_string()).collect()
    }

    #[getter]
    fn tasks(&self) -> Vec<String> {
        self.inner.tasks.iter().map(|t| t.id.to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Scenario(agents={}, tasks={})", self.inner.agents.len(), self.inner.tasks.len())
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &Metrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", &m.mode)?;
    d.set_item("agents", m.agents)?;
    d.set_item("tasks", m.tasks)?;
    d.set_item("seed", m.seed)?;
    d.set_item("messages", m.messages)?;
    d.set_item("structures_sent", m.structures_sent)?;
    d.set_item("structures_evaluated", m.structures_evaluated)?;
    d.set_item("runtime_ms", m.runtime_ms)?;
    d.set_item("outcome", &m.outcome)?;
    d.set_item("solution_id", m.solution_id.as_ref().map(|s| s.to_string()))?;
    Ok(d)
}

fn config(seed: u64, deadline: u64, deps: bool, trust: bool, initiator: Option<&str>) -> NegotiationConfig {
    let mut cfg = NegotiationConfig { seed, deadline, initiator: initiator.map(AgentId::from), ..Default::default() };
    cfg.plan.generate.dependency_handling = deps;
    cfg.strategy.trust = trust;
    cfg
}

/// Runs one negotiation. Returns a dict with the outcome, the transcript
/// lines and the run metrics.
#[pyfunction]
#[pyo3(signature = (scenario, seed=0, deadline=1000, deps=true, trust=true, initiator=None))]
fn run_negotiation<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    seed: u64,
    deadline: u64,
    deps: bool,
    trust: bool,
    initiator: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(seed, deadline, deps, trust, initiator);
    let (outcome, metrics) = harness::measured_run(&scenario.inner, &cfg).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("outcome", outcome.result.label())?;
    d.set_item("solution", outcome.result.solution().map(|s| s.to_string()))?;
    d.set_item("rounds", outcome.rounds)?;
    d.set_item("initiator", outcome.initiator.to_string())?;
    d.set_item("pressure", outcome.pressure)?;
    let lines: Vec<String> = outcome.transcript.iter().map(|m| m.to_string()).collect();
    d.set_item("transcript", lines)?;
    d.set_item("metrics", metrics_dict(py, &metrics)?)?;
    Ok(d)
}

/// Pareto-optimal structure ids of the scenario's structure space.
#[pyfunction]
#[pyo3(signature = (scenario, deps=true))]
fn brute_force_pareto(scenario: &PyScenario, deps: bool) -> PyResult<Vec<String>> {
    let cfg = config(0, 1000, deps, true, None);
    let frontier = harness::brute_force_pareto(&scenario.inner, &cfg.plan).map_err(value_error)?;
    Ok(frontier.into_iter().map(|s| s.to_string()).collect())
}

/// Runs the scenario with task grouping on and off.
#[pyfunction]
#[pyo3(signature = (scenario, seed=0))]
fn compare_dependency_modes<'py>(py: Python<'py>, scenario: &PyScenario, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let cmp = harness::compare_dependency_modes(&scenario.inner, seed).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("on", metrics_dict(py, &cmp.on)?)?;
    d.set_item("off", metrics_dict(py, &cmp.off)?)?;
    d.set_item("evaluated_ratio", cmp.evaluated_ratio)?;
    d.set_item("message_ratio", cmp.message_ratio)?;
    d.set_item("gain", cmp.gain())?;
    Ok(d)
}

/// Agent chosen to open the negotiation for `seed`.
#[pyfunction]
fn seeded_initiator(scenario: &PyScenario, seed: u64) -> Option<String> {
    negotiation::seeded_initiator(&scenario.inner, seed).map(|a| a.to_string())
}

#[pymodule]
fn coalition(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(run_negotiation, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_pareto, m)?)?;
    m.add_function(wrap_pyfunction!(compare_dependency_modes, m)?)?;
    m.add_function(wrap_pyfunction!(seeded_initiator, m)?)?;
    Ok(())
}
