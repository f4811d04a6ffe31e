//! Python bindings for the `phylozdd` crate.
//!
//! Species sets cross the boundary as lists of ints; counts are Python ints
//! of arbitrary size.

use std::ops::ControlFlow;
use std::time::Duration;

use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use phylo::bench::{parse_order, parse_pair_order};
use phylo::bnb::bnb_enumerate;
use phylo::reductions::BipartiteGraph;
use phylo::zdd_enum::{self, BuildOutcome};
use phylo::{datagen, feasibility, format, reductions, ElementSet, Phylogeny};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_sets(n: usize, lists: Vec<Vec<usize>>) -> PyResult<Vec<ElementSet>> {
    lists
        .into_iter()
        .map(|l| ElementSet::from_elements(n, l).map_err(value_err))
        .collect()
}

fn to_lists(sets: &[ElementSet]) -> Vec<Vec<usize>> {
    sets.iter().map(|s| s.iter().collect()).collect()
}

fn timeout(ms: Option<u64>) -> Option<Duration> {
    ms.map(Duration::from_millis)
}

/// Lower and upper species bounds for each character.
#[pyclass(name = "Instance", module = "phylozdd", frozen)]
struct PyInstance {
    inner: phylo::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(n: usize, lower: Vec<Vec<usize>>, upper: Vec<Vec<usize>>) -> PyResult<Self> {
        let inner = phylo::Instance::new(n, to_sets(n, lower)?, to_sets(n, upper)?).map_err(value_err)?;
        Ok(PyInstance { inner })
    }

    /// Parses the text instance format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = format::parse_instance(text).map_err(value_err)?;
        Ok(PyInstance { inner })
    }

    fn to_text(&self) -> String {
        format::write_instance(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn lower(&self) -> Vec<Vec<usize>> {
        to_lists(self.inner.lower())
    }

    #[getter]
    fn upper(&self) -> Vec<Vec<usize>> {
        to_lists(self.inner.upper())
    }

    #[getter]
    fn free_count(&self) -> usize {
        self.inner.free_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(m={}, n={}, free={})",
            self.inner.m(),
            self.inner.n(),
            self.inner.free_count()
        )
    }
}

/// Builds the solution diagram and returns its statistics, or `None` on
/// timeout.
#[pyfunction]
#[pyo3(signature = (inst, order = "character-major", pair_order = "lexicographic", timeout_ms = None))]
fn solve_zdd<'py>(
    py: Python<'py>,
    inst: &PyInstance,
    order: &str,
    pair_order: &str,
    timeout_ms: Option<u64>,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let order = parse_order(order).map_err(value_err)?;
    let schedule = parse_pair_order(pair_order).map_err(value_err)?;
    let inner = &inst.inner;
    let outcome = py
        .detach(|| zdd_enum::solve(inner, order, schedule, timeout(timeout_ms)))
        .map_err(value_err)?;
    let BuildOutcome::Complete(sol) = outcome else {
        return Ok(None);
    };
    let d = PyDict::new(py);
    d.set_item("count", sol.count())?;
    d.set_item("nodes", sol.stats.final_nodes)?;
    d.set_item("peak_nodes", sol.stats.peak_nodes)?;
    d.set_item("pair_steps", sol.stats.pair_steps)?;
    d.set_item("seconds", sol.stats.wall_time.as_secs_f64())?;
    Ok(Some(d))
}

/// Solution count via the diagram, or `None` on timeout.
#[pyfunction]
#[pyo3(signature = (inst, timeout_ms = None))]
fn count_zdd(py: Python<'_>, inst: &PyInstance, timeout_ms: Option<u64>) -> PyResult<Option<BigUint>> {
    let inner = &inst.inner;
    let outcome = py
        .detach(|| zdd_enum::solve(inner, Default::default(), Default::default(), timeout(timeout_ms)))
        .map_err(value_err)?;
    Ok(outcome.complete().map(|s| s.count()))
}

/// Branch-and-bound count: a dict with `found`, `calls` and `completed`.
#[pyfunction]
#[pyo3(signature = (inst, timeout_ms = None))]
fn count_bnb<'py>(py: Python<'py>, inst: &PyInstance, timeout_ms: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let inner = &inst.inner;
    let stats = py.detach(|| bnb_enumerate(inner, |_| {}, timeout(timeout_ms)));
    let d = PyDict::new(py);
    d.set_item("found", stats.found)?;
    d.set_item("calls", stats.calls)?;
    d.set_item("completed", stats.completed)?;
    Ok(d)
}

/// Solutions as lists of species lists, at most `limit` of them.
#[pyfunction]
#[pyo3(signature = (inst, method = "zdd", limit = None))]
fn enumerate(py: Python<'_>, inst: &PyInstance, method: &str, limit: Option<usize>) -> PyResult<Vec<Vec<Vec<usize>>>> {
    let inner = &inst.inner;
    let limit = limit.unwrap_or(usize::MAX);
    let sols: Vec<Phylogeny> = match method {
        "zdd" => py.detach(|| -> phylo::Result<Vec<Phylogeny>> {
            let sol = zdd_enum::solve(inner, Default::default(), Default::default(), None)?
                .complete()
                .expect("no deadline");
            let mut out = Vec::new();
            if limit > 0 {
                sol.for_each_solution(inner, |p| {
                    out.push(p);
                    if out.len() >= limit {
                        ControlFlow::Break(())
                    } else {
                        ControlFlow::Continue(())
                    }
                })?;
            }
            Ok(out)
        }),
        "bnb" => py.detach(|| {
            let mut out = Vec::new();
            bnb_enumerate(
                inner,
                |p| {
                    if out.len() < limit {
                        out.push(p.clone());
                    }
                },
                None,
            );
            Ok(out)
        }),
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    }
    .map_err(value_err)?;
    Ok(sols.iter().map(|p| to_lists(&p.sets)).collect())
}

/// A witness phylogeny, or `None` when the instance is infeasible.
#[pyfunction]
fn feasible(inst: &PyInstance) -> Option<Vec<Vec<usize>>> {
    feasibility::feasible(&inst.inner).witness.map(|w| to_lists(&w.sets))
}

#[pyfunction]
#[pyo3(signature = (inst, cap = 1_000_000))]
fn brute_force_solutions(inst: &PyInstance, cap: usize) -> PyResult<Vec<Vec<Vec<usize>>>> {
    let sols = feasibility::brute_force_solutions(&inst.inner, cap).map_err(value_err)?;
    Ok(sols.iter().map(|p| to_lists(&p.sets)).collect())
}

#[pyfunction]
fn compression_family(chars: usize, extra: usize) -> PyInstance {
    PyInstance {
        inner: datagen::compression_family(chars, extra),
    }
}

#[pyfunction]
fn generate(m: usize, n: usize, p: f64, seed: u64) -> PyResult<PyInstance> {
    let inner = datagen::generate(&datagen::GenConfig { m, n, p, seed }).map_err(value_err)?;
    Ok(PyInstance { inner })
}

#[pyfunction]
fn matching_to_idbpp(a_size: usize, b_size: usize, edges: Vec<(usize, usize)>) -> PyResult<PyInstance> {
    let g = BipartiteGraph::new(a_size, b_size, edges).map_err(value_err)?;
    Ok(PyInstance {
        inner: reductions::matching_to_idbpp(&g),
    })
}

#[pyfunction]
fn brute_force_matching_count(a_size: usize, b_size: usize, edges: Vec<(usize, usize)>) -> PyResult<BigUint> {
    let g = BipartiteGraph::new(a_size, b_size, edges).map_err(value_err)?;
    reductions::brute_force_matching_count(&g).map_err(value_err)
}

#[pyfunction]
fn is_laminar(n: usize, sets: Vec<Vec<usize>>) -> PyResult<bool> {
    phylo::is_laminar(&to_sets(n, sets)?).map_err(value_err)
}

#[pyfunction]
fn canonical_key<'py>(py: Python<'py>, n: usize, sets: Vec<Vec<usize>>) -> PyResult<Bound<'py, PyBytes>> {
    let key = phylo::canonical_key(&Phylogeny::new(to_sets(n, sets)?));
    Ok(PyBytes::new(py, &key))
}

#[pymodule]
#[pyo3(name = "phylozdd")]
fn phylozdd_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(solve_zdd, m)?)?;
    m.add_function(wrap_pyfunction!(count_zdd, m)?)?;
    m.add_function(wrap_pyfunction!(count_bnb, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(feasible, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_solutions, m)?)?;
    m.add_function(wrap_pyfunction!(compression_family, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(matching_to_idbpp, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_matching_count, m)?)?;
    m.add_function(wrap_pyfunction!(is_laminar, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_key, m)?)?;
    Ok(())
}
