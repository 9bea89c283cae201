//! Immutable compressed adjacency for simple undirected graphs.

mod io;
mod query;

pub use io::{load_attributes, load_edge_list, load_edge_list_remapped, write_edge_list};
pub use query::{read_queries, write_queries, LabeledQuery, Query, QueryFile};

use crate::{Error, Result};

pub type NodeId = u32;

/// Dense per-node attribute rows, `n × dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Attributes {
    dim: usize,
    values: Vec<f64>,
}

impl Attributes {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 && !values.is_empty() {
            return Err(Error::validation(
                "attribute dimension 0 with non-empty values",
            ));
        }
        if dim > 0 && !values.len().is_multiple_of(dim) {
            return Err(Error::validation(format!(
                "attribute buffer of length {} is not a multiple of dim {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("attribute values must be finite"));
        }
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.values.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, u: NodeId) -> &[f64] {
        let start = u as usize * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Standardizes every column to zero mean and unit variance. Constant
    /// columns are centred only.
    pub fn standardize(&mut self) {
        let rows = self.rows();
        if rows == 0 {
            return;
        }
        for c in 0..self.dim {
            let mean = (0..rows)
                .map(|r| self.values[r * self.dim + c])
                .sum::<f64>()
                / rows as f64;
            let var = (0..rows)
                .map(|r| (self.values[r * self.dim + c] - mean).powi(2))
                .sum::<f64>()
                / rows as f64;
            let sd = var.sqrt();
            for r in 0..rows {
                let v = &mut self.values[r * self.dim + c];
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
    }
}

/// A simple undirected graph stored as symmetric CSR adjacency.
///
/// Rows are strictly ascending, contain no self-loops, and every arc `u→v`
/// has its reverse `v→u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    attrs: Option<Attributes>,
}

impl Graph {
    /// Builds a graph on `n` nodes from undirected edges. Both orientations
    /// of an edge are accepted, self-loops are dropped and duplicates are
    /// collapsed.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if n > NodeId::MAX as usize {
            return Err(Error::validation(format!(
                "node count {n} exceeds 32-bit id space"
            )));
        }
        let mut arcs: Vec<(NodeId, NodeId)> = Vec::new();
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u != v {
                arcs.push((u, v));
                arcs.push((v, u));
            }
        }
        arcs.sort_unstable();
        arcs.dedup();
        Ok(Self::from_sorted_arcs(n, &arcs))
    }

    fn from_sorted_arcs(n: usize, arcs: &[(NodeId, NodeId)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = arcs.iter().map(|&(_, v)| v).collect();
        Self {
            offsets,
            targets,
            attrs: None,
        }
    }

    /// An edgeless graph on `n` nodes.
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
            attrs: None,
        }
    }

    pub fn with_attributes(mut self, attrs: Attributes) -> Result<Self> {
        if attrs.dim() > 0 && attrs.rows() != self.node_count() {
            return Err(Error::validation(format!(
                "attribute table has {} rows, graph has {} nodes",
                attrs.rows(),
                self.node_count()
            )));
        }
        self.attrs = if attrs.dim() == 0 { None } else { Some(attrs) };
        Ok(self)
    }

    pub fn attributes(&self) -> Option<&Attributes> {
        self.attrs.as_ref()
    }

    /// Attribute dimension `d`; 0 when the graph carries no attributes.
    pub fn attr_dim(&self) -> usize {
        self.attrs.as_ref().map_or(0, Attributes::dim)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored directed arcs (twice the undirected edge count).
    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if (u as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "node {u} out of range for {} nodes",
                self.node_count()
            )))
        }
    }

    /// Ascending neighbour ids of `u`.
    pub fn neighbors(&self, u: NodeId) -> Result<&[NodeId]> {
        self.check_node(u)?;
        Ok(self.adj(u))
    }

    /// Unchecked variant of [`Graph::neighbors`]; panics if `u` is out of range.
    #[inline]
    pub fn adj(&self, u: NodeId) -> &[NodeId] {
        let u = u as usize;
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        let u = u as usize;
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        (u as usize) < self.node_count() && self.adj(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId).flat_map(move |u| {
            self.adj(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    /// Returns a copy of the graph with the given undirected edges removed.
    /// Every pair must be an existing edge; attributes are carried over.
    pub fn mask_edges(&self, hidden: &[(NodeId, NodeId)]) -> Result<Graph> {
        let mut drop: Vec<(NodeId, NodeId)> = Vec::with_capacity(hidden.len() * 2);
        for &(u, v) in hidden {
            if !self.has_edge(u, v) {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) not present in graph"
                )));
            }
            drop.push((u, v));
            drop.push((v, u));
        }
        drop.sort_unstable();
        drop.dedup();

        let n = self.node_count();
        let mut arcs = Vec::with_capacity(self.arc_count() - drop.len());
        for u in 0..n as NodeId {
            for &v in self.adj(u) {
                if drop.binary_search(&(u, v)).is_err() {
                    arcs.push((u, v));
                }
            }
        }
        let mut g = Self::from_sorted_arcs(n, &arcs);
        g.attrs = self.attrs.clone();
        Ok(g)
    }

    /// Checks every structural invariant; used after deserialization and in tests.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if self.offsets[0] != 0 || self.offsets[n] != self.targets.len() {
            return Err(Error::validation(
                "adjacency offsets do not span the target array",
            ));
        }
        for u in 0..n {
            if self.offsets[u] > self.offsets[u + 1] {
                return Err(Error::validation(format!("offsets decrease at node {u}")));
            }
            let row = self.adj(u as NodeId);
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::validation(format!(
                        "row {u} is not strictly ascending"
                    )));
                }
            }
            for &v in row {
                if v as usize >= n {
                    return Err(Error::validation(format!(
                        "row {u} holds out-of-range id {v}"
                    )));
                }
                if v as usize == u {
                    return Err(Error::validation(format!("self-loop at {u}")));
                }
                if !self.has_edge(v, u as NodeId) {
                    return Err(Error::validation(format!("arc {u}->{v} has no reverse")));
                }
            }
        }
        Ok(())
    }
}
