//! Python bindings: instances, tours, 2-Opt runs, gadget families and the
//! exact oracles.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyOSError, PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twoopt_core::analysis::{self, ImprovementScope};
use twoopt_core::engine::{self, PivotKind, PivotRule, RunOptions};
use twoopt_core::experiment::{self, ExperimentConfig};
use twoopt_core::gadgets::{self, FamilyKind, GadgetBuild, GadgetFamily};
use twoopt_core::geometry::{self, Metric, Point};
use twoopt_core::heuristics::{self, InsertionPolicy};
use twoopt_core::{io, random_models, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Capacity { .. } => PyOverflowError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::ScriptViolation { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

#[pyclass(name = "Instance", module = "twoopt_lab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: geometry::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (points, metric = "2", name = "instance"))]
    fn new(points: Vec<Vec<f64>>, metric: &str, name: &str) -> PyResult<Self> {
        let pts = points
            .into_iter()
            .map(Point::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py)?;
        let inner = geometry::Instance::new(name, parse(metric)?, pts).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d = 2, seed = 0))]
    fn uniform(n: usize, d: usize, seed: u64) -> PyResult<Self> {
        let inner = random_models::sample_uniform(n, d, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, phi, d = 2, seed = 0))]
    fn phi_perturbed(n: usize, phi: f64, d: usize, seed: u64) -> PyResult<Self> {
        let inner = random_models::sample_phi_perturbed(n, d, phi, seed, None).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = io::load_instance(&path).map_err(to_py)?.instance;
        Ok(Self { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_instance(&path, &self.inner, &Default::default()).map_err(to_py)
    }

    fn with_metric(&self, metric: &str) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.clone().with_metric(parse(metric)?),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn metric(&self) -> String {
        self.inner.metric().to_string()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points().iter().map(|p| p.coords().to_vec()).collect()
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<f64> {
        let pts = self.inner.points();
        if i >= pts.len() || j >= pts.len() {
            return Err(PyValueError::new_err("vertex index out of range"));
        }
        geometry::distance(&pts[i], &pts[j], self.inner.metric()).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(name={:?}, n={}, d={}, metric={})",
            self.inner.name(),
            self.inner.n(),
            self.inner.dim(),
            self.inner.metric()
        )
    }
}

#[pyclass(name = "Tour", module = "twoopt_lab", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyTour {
    inner: geometry::Tour,
}

#[pymethods]
impl PyTour {
    #[new]
    fn new(order: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: geometry::Tour::new(order).map_err(to_py)?,
        })
    }

    #[getter]
    fn order(&self) -> Vec<usize> {
        self.inner.order().to_vec()
    }

    fn length(&self, inst: &PyInstance) -> PyResult<f64> {
        geometry::tour_length(&self.inner, &inst.inner).map_err(to_py)
    }

    fn crossings(&self, inst: &PyInstance) -> PyResult<usize> {
        analysis::crossing_count(&self.inner, &inst.inner).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Tour({:?})", self.inner.order())
    }
}

#[pyclass(name = "RunTrace", module = "twoopt_lab", frozen)]
struct PyRunTrace {
    inner: engine::RunTrace,
}

#[pymethods]
impl PyRunTrace {
    #[getter]
    fn steps(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn initial_length(&self) -> f64 {
        self.inner.initial_length
    }

    #[getter]
    fn final_length(&self) -> f64 {
        self.inner.final_length()
    }

    #[getter]
    fn terminated(&self) -> String {
        self.inner.terminated.to_string()
    }

    #[getter]
    fn final_tour(&self) -> PyTour {
        PyTour {
            inner: self.inner.final_tour.clone(),
        }
    }

    #[getter]
    fn deltas(&self) -> Vec<f64> {
        self.inner.steps.iter().map(|s| s.delta).collect()
    }

    /// Each step as `(u1, u2, v1, v2)`, oriented as applied.
    #[getter]
    fn moves(&self) -> Vec<(usize, usize, usize, usize)> {
        self.inner
            .steps
            .iter()
            .map(|s| (s.change.u1, s.change.u2, s.change.v1, s.change.v2))
            .collect()
    }

    #[pyo3(signature = (exclude_type2 = false))]
    fn pair_report<'py>(&self, py: Python<'py>, exclude_type2: bool) -> PyResult<Bound<'py, PyDict>> {
        let r = analysis::linked_pair_decomposition(&self.inner, exclude_type2);
        let d = PyDict::new(py);
        d.set_item("t", r.t)?;
        d.set_item("pairs_all", r.pairs_all)?;
        d.set_item("pairs_disjoint", r.pairs_disjoint)?;
        d.set_item("pairs_type01_disjoint", r.pairs_type01_disjoint)?;
        d.set_item("type0", r.histogram.type0)?;
        d.set_item("type1a", r.histogram.type1a)?;
        d.set_item("type1b", r.histogram.type1b)?;
        d.set_item("type2", r.histogram.type2)?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunTrace(steps={}, final_length={}, terminated={})",
            self.inner.len(),
            self.inner.final_length(),
            self.inner.terminated
        )
    }
}

#[pyclass(name = "Gadget", module = "twoopt_lab", frozen)]
struct PyGadget {
    build: GadgetBuild,
}

#[pymethods]
impl PyGadget {
    #[new]
    #[pyo3(signature = (family, count, p = "3"))]
    fn new(family: &str, count: usize, p: &str) -> PyResult<Self> {
        let kind: FamilyKind = parse(family)?;
        let fam = GadgetFamily::new(kind, count, parse(p)?).map_err(to_py)?;
        Ok(Self {
            build: fam.build().map_err(to_py)?,
        })
    }

    #[getter]
    fn instance(&self) -> PyInstance {
        PyInstance {
            inner: self.build.instance.clone(),
        }
    }

    #[getter]
    fn tour(&self) -> PyTour {
        PyTour {
            inner: self.build.tour.clone(),
        }
    }

    #[getter]
    fn script_len(&self) -> usize {
        self.build.script.len()
    }

    #[getter]
    fn expected_steps(&self) -> u64 {
        self.build.family.expected_steps()
    }

    fn vertex_label(&self, v: usize) -> String {
        self.build.family.vertex_label(v)
    }

    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = gadgets::verify_script(&self.build.instance, &self.build.tour, &self.build.script);
        let d = PyDict::new(py);
        d.set_item("ok", r.ok)?;
        d.set_item("steps_checked", r.steps_checked)?;
        d.set_item("expected_count", r.expected_count)?;
        d.set_item("min_margin", r.min_margin)?;
        d.set_item("max_margin", r.max_margin)?;
        d.set_item("first_failure", r.first_failure)?;
        d.set_item("failure", r.failure)?;
        Ok(d)
    }

    /// Replays the script through the engine.
    fn run(&self) -> PyResult<PyRunTrace> {
        let rule = PivotRule::Scripted(Arc::new(self.build.script.clone()));
        let inner = engine::run_with(&self.build.instance, &self.build.tour, &rule, &RunOptions::default())
            .map_err(to_py)?;
        Ok(PyRunTrace { inner })
    }
}

/// Runs 2-Opt from `tour` with pivot rule `first`, `best` or `random`.
#[pyfunction]
#[pyo3(signature = (inst, tour, pivot = "first", seed = 0, step_limit = None))]
fn run(inst: &PyInstance, tour: &PyTour, pivot: &str, seed: u64, step_limit: Option<u64>) -> PyResult<PyRunTrace> {
    let kind: PivotKind = parse(pivot)?;
    let rule = PivotRule::from_kind(kind, Some(seed), None).map_err(to_py)?;
    let opts = RunOptions {
        step_limit: step_limit.unwrap_or(engine::UNBOUNDED_STEPS),
        ..RunOptions::default()
    };
    let inner = engine::run_with(&inst.inner, &tour.inner, &rule, &opts).map_err(to_py)?;
    Ok(PyRunTrace { inner })
}

#[pyfunction]
fn random_tour(inst: &PyInstance, seed: u64) -> PyResult<PyTour> {
    Ok(PyTour {
        inner: heuristics::random_tour(&inst.inner, seed).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (inst, policy = "cheapest", seed = None))]
fn insertion_tour(inst: &PyInstance, policy: &str, seed: Option<u64>) -> PyResult<PyTour> {
    let policy: InsertionPolicy = parse(policy)?;
    Ok(PyTour {
        inner: heuristics::insertion_tour(&inst.inner, policy, seed).map_err(to_py)?,
    })
}

#[pyfunction]
fn held_karp_opt(inst: &PyInstance) -> PyResult<(f64, PyTour)> {
    let (len, inner) = analysis::held_karp_opt(&inst.inner).map_err(to_py)?;
    Ok((len, PyTour { inner }))
}

#[pyfunction]
#[pyo3(signature = (inst, phi = 1.0))]
fn opt_lower_bound(inst: &PyInstance, phi: f64) -> PyResult<f64> {
    analysis::opt_lower_bound(&inst.inner, phi).map_err(to_py)
}

/// Longest improving path as `(steps, [tour orders])`.
#[pyfunction]
fn longest_path(inst: &PyInstance) -> PyResult<(usize, Vec<Vec<usize>>)> {
    let lp = analysis::state_graph_longest_path(&inst.inner).map_err(to_py)?;
    Ok((lp.steps, lp.path.iter().map(|t| t.order().to_vec()).collect()))
}

#[pyfunction]
#[pyo3(signature = (inst, trace = None))]
fn min_improvement(inst: &PyInstance, trace: Option<&PyRunTrace>) -> PyResult<f64> {
    match trace {
        None => analysis::min_improvement(&inst.inner, ImprovementScope::Single, None),
        Some(t) => analysis::min_improvement(&inst.inner, ImprovementScope::LinkedPairs01, Some(&t.inner)),
    }
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (family, p = "3"))]
fn inequality_margins(family: &str, p: &str) -> PyResult<Vec<(String, f64)>> {
    let kind: FamilyKind = parse(family)?;
    let metric: Metric = match kind {
        FamilyKind::Euclidean => Metric::EUCLIDEAN,
        FamilyKind::Manhattan => Metric::MANHATTAN,
        FamilyKind::Lp => parse(p)?,
    };
    Ok(gadgets::inequality_margins(kind, metric)
        .map_err(to_py)?
        .into_iter()
        .map(|m| (m.name, m.value))
        .collect())
}

/// Runs an experiment from its JSON config and returns the CSV text.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let rows = experiment::run_experiment(&cfg).map_err(to_py)?;
    let mut buf = Vec::new();
    experiment::write_csv(&mut buf, &rows).map_err(to_py)?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn twoopt_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyTour>()?;
    m.add_class::<PyRunTrace>()?;
    m.add_class::<PyGadget>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(random_tour, m)?)?;
    m.add_function(wrap_pyfunction!(insertion_tour, m)?)?;
    m.add_function(wrap_pyfunction!(held_karp_opt, m)?)?;
    m.add_function(wrap_pyfunction!(opt_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(longest_path, m)?)?;
    m.add_function(wrap_pyfunction!(min_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(inequality_margins, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
