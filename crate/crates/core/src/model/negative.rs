use std::collections::HashSet;

use rand::Rng;

use crate::graph::{Graph, NodeId, Query};
use crate::{Error, Result};

/// Corrupted tuples tried per negative before falling back.
pub const MAX_ATTEMPTS: usize = 64;

/// Draws negative queries by replacing one position of a positive with a
/// uniformly random node. Candidates that repeat a node, coincide with an
/// observed tuple (as a set) or, for pairs, with an edge of the graph are
/// rejected; after [`MAX_ATTEMPTS`] rejections any duplicate-free
/// corruption is accepted.
#[derive(Debug, Clone)]
pub struct NegativeSampler<'a> {
    graph: &'a Graph,
    observed: HashSet<Vec<NodeId>>,
}

impl<'a> NegativeSampler<'a> {
    pub fn new<'q, I>(graph: &'a Graph, observed: I) -> Self
    where
        I: IntoIterator<Item = &'q Query>,
    {
        Self {
            graph,
            observed: observed.into_iter().map(Query::canonical).collect(),
        }
    }

    pub fn is_observed(&self, nodes: &[NodeId]) -> bool {
        if nodes.len() == 2 && self.graph.has_edge(nodes[0], nodes[1]) {
            return true;
        }
        let mut c = nodes.to_vec();
        c.sort_unstable();
        self.observed.contains(&c)
    }

    /// `k_neg` negatives per positive, grouped by positive in input order.
    pub fn sample<R: Rng>(
        &self,
        positives: &[Query],
        k_neg: usize,
        rng: &mut R,
    ) -> Result<Vec<Query>> {
        let n = self.graph.node_count();
        let mut out = Vec::with_capacity(positives.len() * k_neg);
        if k_neg == 0 {
            return Ok(out);
        }
        for p in positives {
            p.validate(n)?;
            if n < p.arity() {
                return Err(Error::validation(format!(
                    "graph with {n} nodes cannot hold a duplicate-free tuple of arity {}",
                    p.arity()
                )));
            }
        }
        for p in positives {
            for _ in 0..k_neg {
                out.push(self.corrupt(p, rng));
            }
        }
        Ok(out)
    }

    fn corrupt<R: Rng>(&self, p: &Query, rng: &mut R) -> Query {
        let n = self.graph.node_count() as NodeId;
        let mut nodes = p.nodes().to_vec();
        let arity = nodes.len();
        let mut fallback = None;
        for _ in 0..MAX_ATTEMPTS {
            let j = rng.random_range(0..arity);
            let x = rng.random_range(0..n);
            nodes.copy_from_slice(p.nodes());
            if nodes.iter().enumerate().any(|(i, &v)| i != j && v == x) {
                continue;
            }
            nodes[j] = x;
            if !self.is_observed(&nodes) {
                return Query::new(nodes).expect("duplicate-free by construction");
            }
            fallback.get_or_insert_with(|| nodes.clone());
        }
        let nodes = fallback.unwrap_or_else(|| loop {
            let j = rng.random_range(0..arity);
            let x = rng.random_range(0..n);
            let mut c = p.nodes().to_vec();
            if c.iter().enumerate().all(|(i, &v)| i == j || v != x) {
                c[j] = x;
                break c;
            }
        });
        Query::new(nodes).expect("duplicate-free by construction")
    }
}

/// Samples `k_neg` negatives per positive, avoiding the positives themselves
/// and (for pairs) every edge of `g`.
pub fn negative_sample<R: Rng>(
    g: &Graph,
    positives: &[Query],
    k_neg: usize,
    rng: &mut R,
) -> Result<Vec<Query>> {
    if positives.is_empty() {
        return Err(Error::validation(
            "negative sampling needs at least one positive",
        ));
    }
    NegativeSampler::new(g, positives).sample(positives, k_neg, rng)
}
