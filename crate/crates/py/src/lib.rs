use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lumiere_core::config::ScenarioConfig;
use lumiere_core::error::{ConfigError, SimError};
use lumiere_core::experiment::{check_seeds, run_jobs, ExperimentSpec};
use lumiere_core::metrics::{check_lemma_suite, MetricsRow};
use lumiere_core::sim::run;

fn config_err(e: ConfigError) -> PyErr {
    match e.line {
        Some(l) => PyValueError::new_err(format!("line {l}: {}: {}", e.pointer, e.message)),
        None => PyValueError::new_err(format!("{}: {}", e.pointer, e.message)),
    }
}

fn sim_err(e: SimError) -> PyErr {
    match e {
        SimError::Config(c) => config_err(c),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Round-trip through JSON so Python gets plain dicts and lists.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse(scenario_json: &str, seed: Option<u64>) -> PyResult<ScenarioConfig> {
    let mut cfg = ScenarioConfig::from_json_str(scenario_json).map_err(config_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Run one scenario (a JSON document) and return its metrics row as a dict.
#[pyfunction]
#[pyo3(signature = (scenario_json, seed=None, name="scenario"))]
fn run_scenario(py: Python<'_>, scenario_json: &str, seed: Option<u64>, name: &str) -> PyResult<Py<PyAny>> {
    let cfg = parse(scenario_json, seed)?;
    let out = py.detach(|| run(&cfg)).map_err(sim_err)?;
    to_py(py, &MetricsRow::from_run(name, &out))
}

/// Run one scenario and return its trace as JSON lines.
#[pyfunction]
#[pyo3(signature = (scenario_json, seed=None))]
fn trace_jsonl(py: Python<'_>, scenario_json: &str, seed: Option<u64>) -> PyResult<String> {
    let cfg = parse(scenario_json, seed)?;
    let out = py.detach(|| run(&cfg)).map_err(sim_err)?;
    let mut buf = Vec::new();
    out.trace
        .write_jsonl(&mut buf)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Lemma suite for seeds `start..end`: a list of `(seed, violations)`.
#[pyfunction]
fn check(py: Python<'_>, scenario_json: &str, start: u64, end: u64) -> PyResult<Py<PyAny>> {
    if start >= end {
        return Err(PyValueError::new_err(format!("empty seed range {start}..{end}")));
    }
    let cfg = parse(scenario_json, None)?;
    let reports = py.detach(|| check_seeds(&cfg, start..end)).map_err(sim_err)?;
    let pairs: Vec<_> = reports.into_iter().map(|(s, r)| (s, r.violations)).collect();
    to_py(py, &pairs)
}

/// Lemma suite for a single run; True iff no violations.
#[pyfunction]
#[pyo3(signature = (scenario_json, seed=None))]
fn lemmas_pass(py: Python<'_>, scenario_json: &str, seed: Option<u64>) -> PyResult<bool> {
    let cfg = parse(scenario_json, seed)?;
    let out = py.detach(|| run(&cfg)).map_err(sim_err)?;
    Ok(check_lemma_suite(&out).passed())
}

/// Every run of an experiment spec (a JSON document), as a list of dicts
/// sorted by scenario and seed.
#[pyfunction]
fn sweep(py: Python<'_>, experiment_json: &str) -> PyResult<Py<PyAny>> {
    let spec = ExperimentSpec::from_json_str(experiment_json).map_err(config_err)?;
    let jobs = spec.jobs().map_err(config_err)?;
    let rows = py.detach(|| run_jobs(&jobs)).map_err(sim_err)?;
    to_py(py, &rows)
}

#[pymodule]
fn lumiere(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(trace_jsonl, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(lemmas_pass, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
