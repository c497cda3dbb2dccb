use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use collab_core::experiment::{self, Preset, SweepOptions, SweepRow, SweepSpec};
use collab_core::metrics::{graph_report as core_graph_report, Estimation, SamplingPlan};
use collab_core::project::{project_stats, GradeScale, TransitionLog};
use collab_core::regression::standardized_ols as core_ols;
use collab_core::seed::{rng_for, Stream};
use collab_core::{DirectedGraph, Error, StrategyKind, TrialSpec};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn solution(bits: &str) -> PyResult<collab_core::Solution> {
    collab_core::Solution::from_bit_str(bits)
        .ok_or_else(|| PyValueError::new_err(format!("expected a string of 0s and 1s, got {bits:?}")))
}

#[pyclass(name = "NkModel", module = "collab", frozen)]
struct PyNkModel {
    inner: collab_core::NkModel,
}

#[pymethods]
impl PyNkModel {
    #[new]
    fn new(n: usize, k: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: collab_core::NkModel::generate(n, k, seed).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: collab_core::NkModel::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn neighbors(&self, locus: usize) -> PyResult<Vec<usize>> {
        if locus >= self.inner.n() {
            return Err(PyValueError::new_err(format!("locus {locus} out of range")));
        }
        Ok(self.inner.neighbors(locus).to_vec())
    }

    /// Mean locus value of a solution given as a string of 0s and 1s.
    fn fitness(&self, bits: &str) -> PyResult<f64> {
        self.inner.fitness(&solution(bits)?).map_err(to_py)
    }

    fn locus_value(&self, bits: &str, locus: usize) -> PyResult<f64> {
        self.inner.locus_value(&solution(bits)?, locus).map_err(to_py)
    }

    fn local_score(&self, bits: &str, loci: Vec<usize>) -> PyResult<f64> {
        self.inner.local_score(&solution(bits)?, &loci).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("NkModel(n={}, k={}, seed={})", self.inner.n(), self.inner.k(), self.inner.seed())
    }
}

#[pyclass(name = "ConcernNetwork", module = "collab", frozen)]
struct PyConcernNetwork {
    inner: collab_core::ConcernNetwork,
}

#[pymethods]
impl PyConcernNetwork {
    /// Concern network for `model`, rewired with probability `p` using the
    /// rewiring stream of `seed`.
    #[new]
    fn new(model: &PyNkModel, p: f64, seed: u64) -> PyResult<Self> {
        let mut rng = rng_for(seed, Stream::Rewire);
        let inner = collab_core::ConcernNetwork::generate(&model.inner, collab_core::RewireOptions::new(p), &mut rng)
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn degree(&self, agent: usize) -> PyResult<usize> {
        self.check(agent)?;
        Ok(self.inner.degree(agent))
    }

    fn neighbors(&self, agent: usize) -> PyResult<Vec<usize>> {
        self.check(agent)?;
        Ok(self.inner.neighbors(agent).to_vec())
    }

    fn concern(&self, agent: usize) -> PyResult<Vec<usize>> {
        self.check(agent)?;
        Ok(self.inner.agents()[agent].concern.clone())
    }

    #[getter]
    fn mean_degree(&self) -> f64 {
        self.inner.mean_degree()
    }

    /// Directed edge list (each undirected link appears in both directions).
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.to_directed().edges().collect()
    }
}

impl PyConcernNetwork {
    fn check(&self, agent: usize) -> PyResult<()> {
        if agent >= self.inner.len() {
            return Err(PyValueError::new_err(format!("agent {agent} out of range")));
        }
        Ok(())
    }
}

#[pyclass(name = "TrialResult", module = "collab", frozen, get_all)]
struct PyTrialResult {
    strategy: String,
    rewire_p: f64,
    seed: u64,
    performance: f64,
    efficiency: f64,
    converged_at: usize,
    mean_degree: f64,
    path_length: f64,
    trajectory: Vec<f64>,
}

#[pymethods]
impl PyTrialResult {
    fn __repr__(&self) -> String {
        format!(
            "TrialResult(strategy={:?}, p={}, seed={}, performance={:.4}, efficiency={:.4}, converged_at={})",
            self.strategy, self.rewire_p, self.seed, self.performance, self.efficiency, self.converged_at
        )
    }
}

fn strategy(name: &str) -> PyResult<StrategyKind> {
    name.parse().map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (strategy_name, rewire_p=0.0, seed=0, n=250, k=7, iterations=300, sample_size=3))]
#[allow(clippy::too_many_arguments)]
fn run_trial(
    py: Python<'_>,
    strategy_name: &str,
    rewire_p: f64,
    seed: u64,
    n: usize,
    k: usize,
    iterations: usize,
    sample_size: usize,
) -> PyResult<PyTrialResult> {
    let mut spec = TrialSpec::new(strategy(strategy_name)?, rewire_p, seed);
    spec.n = n;
    spec.k = k;
    spec.iterations = iterations;
    spec.strategy.neighbor_sample_size = sample_size;
    let r = py.detach(|| collab_core::run_trial(&spec)).map_err(to_py)?;
    Ok(PyTrialResult {
        strategy: r.spec.strategy.kind.name().to_string(),
        rewire_p,
        seed,
        performance: r.performance,
        efficiency: r.efficiency,
        converged_at: r.converged_at,
        mean_degree: r.network.mean_degree,
        path_length: r.network.path_length,
        trajectory: r.trajectory.values().to_vec(),
    })
}

fn row_dict<'py>(py: Python<'py>, r: &SweepRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("strategy", r.strategy.name())?;
    d.set_item("n", r.n)?;
    d.set_item("k", r.k)?;
    d.set_item("rewire_p", r.rewire_p)?;
    d.set_item("seed", r.seed)?;
    d.set_item("mean_degree", r.mean_degree)?;
    d.set_item("path_length", r.path_length)?;
    d.set_item("performance", r.performance)?;
    d.set_item("efficiency", r.efficiency)?;
    d.set_item("converged_at", r.converged_at)?;
    Ok(d)
}

/// Runs a sweep and returns one dict per trial.
#[pyfunction]
#[pyo3(signature = (preset="desk", trials=None, n=None, rewire=None, strategies=None, master_seed=None, checkpoint=None))]
#[allow(clippy::too_many_arguments)]
fn run_sweep<'py>(
    py: Python<'py>,
    preset: &str,
    trials: Option<usize>,
    n: Option<usize>,
    rewire: Option<Vec<f64>>,
    strategies: Option<Vec<String>>,
    master_seed: Option<u64>,
    checkpoint: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut spec = SweepSpec::preset(preset.parse::<Preset>().map_err(to_py)?);
    if let Some(v) = trials {
        spec.trials = v;
    }
    if let Some(v) = n {
        spec.n = v;
    }
    if let Some(v) = rewire {
        spec.rewire = v;
    }
    if let Some(v) = strategies {
        spec.strategies = v.iter().map(|s| strategy(s)).collect::<PyResult<_>>()?;
    }
    if let Some(v) = master_seed {
        spec.master_seed = v;
    }
    let opts = SweepOptions {
        checkpoint,
        ..Default::default()
    };
    let rows = py.detach(|| experiment::run_sweep(&spec, &opts)).map_err(to_py)?;
    rows.iter().map(|r| row_dict(py, r)).collect()
}

/// Metrics of a directed graph given as `(src, dst)` pairs over nodes
/// `0..nodes`. Sampled estimation unless `exact` is set.
#[pyfunction]
#[pyo3(signature = (nodes, edges, exact=false, samples_per_stratum=4, seed=0))]
fn graph_metrics<'py>(
    py: Python<'py>,
    nodes: usize,
    edges: Vec<(usize, usize)>,
    exact: bool,
    samples_per_stratum: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let g = DirectedGraph::from_edges(nodes, &edges).map_err(to_py)?;
    let mode = if exact {
        Estimation::Exact
    } else {
        Estimation::Sampled(SamplingPlan::new(samples_per_stratum, seed))
    };
    let r = py.detach(|| core_graph_report(&g, mode, mode)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("nodes", r.nodes)?;
    d.set_item("edges", r.edges)?;
    d.set_item("mean_degree", r.mean_degree)?;
    d.set_item("in_degree_skewness", r.in_degree_skewness)?;
    d.set_item("out_degree_skewness", r.out_degree_skewness)?;
    d.set_item("mean_path_length", r.mean_path_length)?;
    d.set_item("connected_fraction", r.connected_fraction)?;
    d.set_item("mean_min_cut", r.mean_min_cut)?;
    Ok(d)
}

/// Per-project efficiency by grade and performance from transition CSV text.
#[pyfunction]
fn project_metrics<'py>(py: Python<'py>, csv_text: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let scale = GradeScale::default();
    let log = TransitionLog::read_csv(csv_text.as_bytes(), &scale).map_err(to_py)?;
    let stats = project_stats(&log, &scale).map_err(to_py)?;
    stats
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("project", &s.project)?;
            for (g, st) in &s.grades {
                d.set_item(format!("E_{g}"), st.efficiency())?;
            }
            d.set_item("P", s.performance)?;
            d.set_item("n_articles", s.n_articles)?;
            Ok(d)
        })
        .collect()
}

/// Slope and two-sided p-value of z(y) regressed on z(x).
#[pyfunction]
fn standardized_ols<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let f = core_ols(&x, &y).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("slope", f.slope)?;
    d.set_item("std_error", f.std_error)?;
    d.set_item("p_value", f.p_value)?;
    d.set_item("n", f.n)?;
    Ok(d)
}

#[pymodule]
fn collab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNkModel>()?;
    m.add_class::<PyConcernNetwork>()?;
    m.add_class::<PyTrialResult>()?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(graph_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(project_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(standardized_ols, m)?)?;
    m.add("STRATEGIES", StrategyKind::ALL.map(|k| k.name()).to_vec())?;
    Ok(())
}
