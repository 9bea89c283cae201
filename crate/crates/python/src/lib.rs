//! Python bindings for `setgrl_core`.
//!
//! Arrays cross the boundary as plain lists; the heavy work (sampling,
//! joins, training) runs with the interpreter lock released.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use setgrl_core::graph::{load_edge_list, NodeId, Query};
use setgrl_core::harness::config::{EncoderKind, SamplerConfig, SamplerKind};
use setgrl_core::harness::generators;
use setgrl_core::harness::ExperimentConfig;
use setgrl_core::metrics::{self, RankedQueryScores};
use setgrl_core::{sampling, spg, spjoin, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Validation(_) | Error::Parse { .. } | Error::Query { .. } | Error::Seed { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn query(nodes: Vec<NodeId>) -> PyResult<Query> {
    Query::new(nodes).map_err(to_py)
}

/// Undirected simple graph in CSR form.
#[pyclass(module = "setgrl", name = "Graph", frozen)]
struct PyGraph {
    inner: setgrl_core::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(NodeId, NodeId)>) -> PyResult<Self> {
        let inner = setgrl_core::Graph::from_edges(n, edges).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Reads a whitespace-separated edge list; `dedup` collapses repeated edges.
    #[staticmethod]
    #[pyo3(signature = (path, dedup = false))]
    fn from_edge_file(path: PathBuf, dedup: bool) -> PyResult<Self> {
        let file = File::open(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        let inner = load_edge_list(BufReader::new(file), dedup).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, blocks = 4, p_in = 0.05, p_out = 0.005, seed = 1))]
    fn sbm(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> PyResult<Self> {
        let inner = generators::sbm(n, blocks, p_in, p_out, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, neighbors = 1))]
    fn ring(n: usize, neighbors: usize) -> PyResult<Self> {
        let inner = generators::ring_lattice(n, neighbors).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, m = 3, seed = 1))]
    fn preferential_attachment(n: usize, m: usize, seed: u64) -> PyResult<Self> {
        let inner = generators::preferential_attachment(n, m, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn degree(&self, u: NodeId) -> PyResult<usize> {
        self.inner.check_node(u).map_err(to_py)?;
        Ok(self.inner.degree(u))
    }

    fn neighbors(&self, u: NodeId) -> PyResult<Vec<NodeId>> {
        Ok(self.inner.neighbors(u).map_err(to_py)?.to_vec())
    }

    fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.inner.has_edge(u, v)
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.inner.edges().collect()
    }

    /// Copy of the graph without the listed edges.
    fn mask_edges(&self, hidden: Vec<(NodeId, NodeId)>) -> PyResult<Self> {
        let inner = self.inner.mask_edges(&hidden).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Compressed per-node sets with an interned feature bank.
#[pyclass(module = "setgrl", name = "SpG", frozen)]
struct PySpG {
    inner: spg::SpG,
}

#[pymethods]
impl PySpG {
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    fn unique_features(&self) -> usize {
        self.inner.unique_features()
    }

    /// `(members, features)` of seed `u`, one feature list per member.
    fn row(&self, u: NodeId) -> PyResult<(Vec<NodeId>, Vec<Vec<f32>>)> {
        let s = self.inner.sample(u).map_err(to_py)?;
        let rows = (0..s.len()).map(|i| s.feature_row(i).to_vec()).collect();
        Ok((s.members, rows))
    }

    fn stats(&self) -> HashMap<&'static str, f64> {
        let s = self.inner.stats();
        HashMap::from([
            ("n", s.n as f64),
            ("k", s.k as f64),
            ("total_entries", s.total_entries as f64),
            ("unique_features", s.unique_features as f64),
            ("bytes_structure", s.bytes_structure as f64),
            ("bytes_features", s.bytes_features as f64),
            ("dedup_ratio", s.dedup_ratio),
        ])
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        self.inner
            .write_snapshot(BufWriter::new(file))
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = File::open(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        let inner = spg::SpG::read_snapshot(BufReader::new(file)).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let s = self.inner.stats();
        format!(
            "SpG(nodes={}, k={}, entries={}, unique_features={})",
            s.n, s.k, s.total_entries, s.unique_features
        )
    }
}

/// Outer join of the sets of a query's nodes.
#[pyclass(module = "setgrl", name = "JoinedQuery", frozen, get_all)]
struct PyJoinedQuery {
    query: Vec<NodeId>,
    members: Vec<NodeId>,
    k: usize,
    /// One row per member, `len(query) * k` wide.
    rows: Vec<Vec<f32>>,
    presence: Vec<Vec<bool>>,
}

impl From<spjoin::JoinedQuery> for PyJoinedQuery {
    fn from(jq: spjoin::JoinedQuery) -> Self {
        let rows = (0..jq.len()).map(|i| jq.row(i).to_vec()).collect();
        let presence = (0..jq.len()).map(|i| jq.presence_row(i).to_vec()).collect();
        Self {
            query: jq.query.nodes().to_vec(),
            members: jq.members,
            k: jq.k,
            rows,
            presence,
        }
    }
}

#[pymethods]
impl PyJoinedQuery {
    fn __len__(&self) -> usize {
        self.members.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "JoinedQuery(query={:?}, members={}, k={})",
            self.query,
            self.members.len(),
            self.k
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn sampler_config(
    sampler: &str,
    encoder: Option<&str>,
    num_walks: u32,
    num_steps: u32,
    top_k: usize,
    alpha: f64,
    epsilon: f64,
    d_max: Option<u32>,
) -> PyResult<SamplerConfig> {
    let sampler = match sampler {
        "walk" => SamplerKind::Walk,
        "ppr" => SamplerKind::Ppr,
        other => return Err(PyValueError::new_err(format!("unknown sampler {other:?}"))),
    };
    let encoder = match (encoder, sampler) {
        (None, SamplerKind::Walk) | (Some("lp"), _) => EncoderKind::Lp,
        (None, SamplerKind::Ppr) | (Some("ppr"), _) => EncoderKind::Ppr,
        (Some("spd"), _) => EncoderKind::Spd,
        (Some(other), _) => {
            return Err(PyValueError::new_err(format!("unknown encoder {other:?}")))
        }
    };
    Ok(SamplerConfig {
        sampler,
        encoder,
        num_walks,
        num_steps,
        top_k,
        alpha,
        epsilon,
        d_max,
        rng_seed: 0,
    })
}

/// Samples a set around every node and packs the result into an SpG.
#[pyfunction]
#[pyo3(signature = (graph, sampler = "walk", encoder = None, num_walks = 100, num_steps = 3,
                    top_k = 50, alpha = 0.15, epsilon = 1e-4, d_max = None, seed = 0, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn build_store(
    py: Python<'_>,
    graph: &PyGraph,
    sampler: &str,
    encoder: Option<&str>,
    num_walks: u32,
    num_steps: u32,
    top_k: usize,
    alpha: f64,
    epsilon: f64,
    d_max: Option<u32>,
    seed: u64,
    threads: usize,
) -> PyResult<PySpG> {
    let spec = sampler_config(
        sampler, encoder, num_walks, num_steps, top_k, alpha, epsilon, d_max,
    )?
    .spec(seed);
    let g = &graph.inner;
    let inner = py
        .detach(|| sampling::sample_all(g, &spec, threads).and_then(|s| spg::build_spg(&s)))
        .map_err(to_py)?;
    Ok(PySpG { inner })
}

/// Joins a single query given as a list of node ids.
#[pyfunction]
fn join(store: &PySpG, nodes: Vec<NodeId>) -> PyResult<PyJoinedQuery> {
    let jq = spjoin::join(&store.inner, &query(nodes)?).map_err(to_py)?;
    Ok(jq.into())
}

/// Joins many queries on `threads` workers; output follows input order.
#[pyfunction]
#[pyo3(signature = (store, queries, threads = 1))]
fn join_batch(
    py: Python<'_>,
    store: &PySpG,
    queries: Vec<Vec<NodeId>>,
    threads: usize,
) -> PyResult<Vec<PyJoinedQuery>> {
    let queries = queries
        .into_iter()
        .map(query)
        .collect::<PyResult<Vec<_>>>()?;
    let s = &store.inner;
    let out = py
        .detach(|| spjoin::join_batch(s, &queries, threads))
        .map_err(to_py)?;
    Ok(out.into_iter().map(Into::into).collect())
}

/// Tie-aware ROC AUC.
#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    metrics::auc(&scores, &labels).map_err(to_py)
}

fn ranked(pos: Vec<f64>, neg: Vec<Vec<f64>>) -> PyResult<Vec<RankedQueryScores>> {
    if pos.len() != neg.len() {
        return Err(PyValueError::new_err(format!(
            "{} positives but {} negative lists",
            pos.len(),
            neg.len()
        )));
    }
    Ok(pos
        .into_iter()
        .zip(neg)
        .map(|(p, n)| RankedQueryScores::new(p, n))
        .collect())
}

/// Mean reciprocal rank of each positive among its own negatives.
#[pyfunction]
fn mrr(pos_scores: Vec<f64>, neg_scores: Vec<Vec<f64>>) -> PyResult<f64> {
    metrics::mrr(&ranked(pos_scores, neg_scores)?).map_err(to_py)
}

#[pyfunction]
fn hits_at(pos_scores: Vec<f64>, neg_scores: Vec<Vec<f64>>, p: usize) -> PyResult<f64> {
    metrics::hits_at(&ranked(pos_scores, neg_scores)?, p).map_err(to_py)
}

/// Default experiment configuration as TOML.
#[pyfunction]
fn default_config() -> PyResult<String> {
    ExperimentConfig::default().to_toml_string().map_err(to_py)
}

/// Runs a full experiment and returns its JSON-lines report. `config` is
/// TOML text (defaults when omitted); `overrides` maps keys such as
/// `"train.epochs"` to values.
#[pyfunction]
#[pyo3(signature = (config = None, overrides = None, out_dir = None))]
fn run_experiment(
    py: Python<'_>,
    config: Option<&str>,
    overrides: Option<HashMap<String, String>>,
    out_dir: Option<PathBuf>,
) -> PyResult<String> {
    let mut cfg = match config {
        Some(text) => ExperimentConfig::from_toml_str(text).map_err(to_py)?,
        None => ExperimentConfig::default(),
    };
    let mut pairs: Vec<(String, String)> = overrides.unwrap_or_default().into_iter().collect();
    pairs.sort();
    cfg.apply_overrides(&pairs).map_err(to_py)?;
    cfg.validate().map_err(to_py)?;
    let report = py
        .detach(|| setgrl_core::harness::run_experiment(&cfg, out_dir.as_deref()))
        .map_err(to_py)?;
    report.to_jsonl().map_err(to_py)
}

#[pymodule]
pub fn setgrl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySpG>()?;
    m.add_class::<PyJoinedQuery>()?;
    m.add_function(wrap_pyfunction!(build_store, m)?)?;
    m.add_function(wrap_pyfunction!(join, m)?)?;
    m.add_function(wrap_pyfunction!(join_batch, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(mrr, m)?)?;
    m.add_function(wrap_pyfunction!(hits_at, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
