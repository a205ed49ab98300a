//! Python bindings: parse problems, query knowledge, search for plans and
//! build the benchmark instances.

use std::fs;

use epiplan_core::bench::{self, Family};
use epiplan_core::dsl;
use epiplan_core::planning::Problem;
use epiplan_core::search::{self, SearchConfig};
use epiplan_core::Value;
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::IntoPyObjectExt;

create_exception!(epiplan, ParseError, PyValueError, "Malformed problem or formula text.");

fn parse_err(diags: Vec<dsl::Diagnostic>) -> PyErr {
    ParseError::new_err(dsl::render(&diags).trim_end().to_string())
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Int(i) => i.into_py_any(py),
        Value::Bool(b) => b.into_py_any(py),
        Value::Sym(_) => v.to_string().into_py_any(py),
    }
}

/// Accepts either one action per line in a string or a list of action strings.
fn plan_text(plan: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = plan.extract::<String>() {
        return Ok(s);
    }
    Ok(plan.extract::<Vec<String>>()?.join("\n"))
}

/// A parsed planning problem.
#[pyclass(name = "Problem", module = "epiplan", frozen)]
struct PyProblem {
    inner: Problem,
}

#[pymethods]
impl PyProblem {
    /// Parses problem text; `file` only labels error messages.
    #[staticmethod]
    #[pyo3(signature = (text, file = "<string>"))]
    fn parse(text: &str, file: &str) -> PyResult<Self> {
        let inner = dsl::parse_problem(file, text).map_err(parse_err)?;
        Ok(PyProblem { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        Self::parse(&text, path)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn agents(&self) -> Vec<String> {
        self.inner.agents().to_vec()
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.vars().iter().map(|v| v.name.clone()).collect()
    }

    /// Initial value of every variable, keyed by name.
    fn initial_state(&self, py: Python<'_>) -> PyResult<Vec<(String, Py<PyAny>)>> {
        let s = self.inner.initial();
        self.inner
            .vars()
            .iter()
            .enumerate()
            .map(|(i, v)| Ok((v.name.clone(), to_py(py, s.get(i))?)))
            .collect()
    }

    /// Every ground action, in the order the planner tries them.
    fn actions(&self) -> Vec<String> {
        self.inner.ground_all().iter().map(ToString::to_string).collect()
    }

    /// Truth of `query` in the initial state, or after executing `plan`.
    #[pyo3(signature = (query, plan = None))]
    fn eval(&self, query: &str, plan: Option<&Bound<'_, PyAny>>) -> PyResult<bool> {
        let p = &self.inner;
        let f = dsl::parse_formula(query, p).map_err(parse_err)?;
        let ctx = p.context();
        let mut s = p.initial().clone();
        if let Some(plan) = plan {
            for a in p.parse_plan(&plan_text(plan)?).map_err(value_err)? {
                if !p.applicable(&ctx, &a, &s).map_err(value_err)? {
                    return Err(PyValueError::new_err(format!("{a} is not applicable")));
                }
                s = p.apply(&ctx, &a, &s).map_err(value_err)?;
            }
        }
        ctx.eval_state(&f, &s).map_err(value_err)
    }

    /// Replays `plan` and returns the verdict, e.g. "valid" or "goal unmet".
    fn check(&self, plan: &Bound<'_, PyAny>) -> PyResult<String> {
        let p = &self.inner;
        let actions = p.parse_plan(&plan_text(plan)?).map_err(value_err)?;
        Ok(p.validate_plan(&p.context(), &actions).map_err(value_err)?.to_string())
    }

    /// Searches for a plan with breadth-first or novelty-pruned search.
    #[pyo3(signature = (search = "bfs", width = 1, max_nodes = None, max_seconds = None))]
    fn solve(
        &self,
        py: Python<'_>,
        search: &str,
        width: usize,
        max_nodes: Option<u64>,
        max_seconds: Option<f64>,
    ) -> PyResult<SolveResult> {
        let mut cfg = match search {
            "bfs" => SearchConfig::bfs(),
            "novelty" => SearchConfig::novelty(width),
            other => return Err(PyValueError::new_err(format!("unknown search `{other}`"))),
        };
        cfg.max_nodes = max_nodes;
        cfg.max_seconds = max_seconds;
        let p = &self.inner;
        let (outcome, stats) = py
            .detach(|| search::solve(&p.context(), p, &cfg))
            .map_err(value_err)?;
        Ok(SolveResult {
            outcome: outcome.label().to_string(),
            plan: outcome.plan().map(|a| a.iter().map(ToString::to_string).collect()),
            generated: stats.generated,
            expanded: stats.expanded,
            distinct_states: stats.distinct_states,
            external_calls: stats.external_calls,
            elapsed: stats.elapsed,
        })
    }

    /// The problem printed back in the text format.
    fn to_text(&self) -> String {
        dsl::print_problem(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem({:?}, agents={}, variables={})",
            self.inner.name(),
            self.inner.agents().len(),
            self.inner.vars().len()
        )
    }
}

#[pyclass(module = "epiplan", frozen, get_all)]
struct SolveResult {
    /// "SOLVED", "UNSOLVABLE", "PRUNED_EXHAUSTED" or "RESOURCE_LIMIT".
    outcome: String,
    plan: Option<Vec<String>>,
    generated: u64,
    expanded: u64,
    distinct_states: u64,
    external_calls: u64,
    elapsed: f64,
}

#[pymethods]
impl SolveResult {
    #[getter]
    fn solved(&self) -> bool {
        self.plan.is_some()
    }

    fn __repr__(&self) -> String {
        match &self.plan {
            Some(p) => format!("SolveResult({}, plan={:?})", self.outcome, p),
            None => format!("SolveResult({})", self.outcome),
        }
    }
}

/// Every instance of a benchmark family as `(id, Problem)` pairs.
#[pyfunction]
fn benchmark(family: &str) -> PyResult<Vec<(String, PyProblem)>> {
    let family: Family = family.parse().map_err(PyValueError::new_err)?;
    Ok(bench::instances(family)
        .map_err(value_err)?
        .into_iter()
        .map(|i| (i.id, PyProblem { inner: i.problem }))
        .collect())
}

#[pyfunction]
fn bbl(index: usize) -> PyResult<PyProblem> {
    Ok(PyProblem { inner: bench::build_bbl(index).map_err(value_err)? })
}

#[pyfunction]
fn sn(index: usize) -> PyResult<PyProblem> {
    Ok(PyProblem { inner: bench::build_sn(index).map_err(value_err)? })
}

#[pyfunction]
fn corridor(agents: usize, rooms: usize, depth: usize, goals: usize) -> PyResult<PyProblem> {
    Ok(PyProblem { inner: bench::gen_corridor(agents, rooms, depth, goals).map_err(value_err)? })
}

#[pyfunction]
fn grapevine(agents: usize, depth: usize, goals: usize) -> PyResult<PyProblem> {
    Ok(PyProblem { inner: bench::gen_grapevine(agents, depth, goals).map_err(value_err)? })
}

#[pymodule]
fn epiplan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<SolveResult>()?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(bbl, m)?)?;
    m.add_function(wrap_pyfunction!(sn, m)?)?;
    m.add_function(wrap_pyfunction!(corridor, m)?)?;
    m.add_function(wrap_pyfunction!(grapevine, m)?)?;
    Ok(())
}
