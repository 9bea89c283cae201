//! Inductive train/valid/test splitting.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Graph, LabeledQuery, NodeId, Query};
use crate::model::NegativeSampler;
use crate::{Error, Result};

/// Positives of one split plus `negatives_per_positive` negatives for each,
/// stored grouped: negatives of `positives[i]` occupy
/// `negatives[i * k .. (i + 1) * k]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitSet {
    pub positives: Vec<Query>,
    pub negatives: Vec<Query>,
    pub negatives_per_positive: usize,
}

impl SplitSet {
    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn negatives_of(&self, i: usize) -> &[Query] {
        let k = self.negatives_per_positive;
        &self.negatives[i * k..(i + 1) * k]
    }

    /// Positives labelled 1 followed by negatives labelled 0.
    pub fn labeled(&self) -> Vec<LabeledQuery> {
        let pos = self
            .positives
            .iter()
            .map(|q| LabeledQuery::new(q.clone(), true));
        let neg = self
            .negatives
            .iter()
            .map(|q| LabeledQuery::new(q.clone(), false));
        pos.chain(neg).collect()
    }

    /// Positives then negatives, matching [`SplitSet::labeled`].
    pub fn queries(&self) -> Vec<Query> {
        self.positives
            .iter()
            .chain(&self.negatives)
            .cloned()
            .collect()
    }
}

/// Result of [`split_inductive`]: the graph used for sampling and encoding
/// (held-out positives masked) and the three query sets.
#[derive(Debug, Clone)]
pub struct DataSplit {
    pub graph: Graph,
    pub train: SplitSet,
    pub valid: SplitSet,
    pub test: SplitSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitFractions {
    /// Positive counts for a pool of `total` candidates.
    pub fn counts(&self, total: usize) -> Result<[usize; 3]> {
        let fr = [self.train, self.valid, self.test];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || fr.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::validation(
                "split fractions must lie in [0, 1] and sum to at most 1",
            ));
        }
        let counts = fr.map(|f| (f * total as f64).round() as usize);
        if counts.iter().sum::<usize>() > total {
            return Err(Error::validation(format!(
                "split requests more than the {total} available positives"
            )));
        }
        if fr.iter().zip(&counts).any(|(&f, &c)| f > 0.0 && c == 0) {
            return Err(Error::validation(format!(
                "{total} candidate positives are too few for split fractions {fr:?}"
            )));
        }
        Ok(counts)
    }
}

/// Samples positive edges uniformly for the three splits, masks all of them
/// from `g`, and draws `k_neg` negatives per training positive and
/// `eval_neg` per validation/test positive. Negatives avoid every edge of
/// the unmasked graph.
pub fn split_inductive<R: Rng>(
    g: &Graph,
    fractions: SplitFractions,
    k_neg: usize,
    eval_neg: usize,
    rng: &mut R,
) -> Result<DataSplit> {
    let mut edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    let counts = fractions.counts(edges.len())?;
    edges.shuffle(rng);
    let held: usize = counts.iter().sum();
    let graph = g.mask_edges(&edges[..held])?;
    let positives: Vec<Query> = edges[..held]
        .iter()
        .map(|&(u, v)| Query::pair(u, v))
        .collect::<Result<_>>()?;
    finish(g, graph, positives, counts, k_neg, eval_neg, rng)
}

/// Splits an explicit list of positive queries. Pair queries that are
/// edges of `g` are masked like [`split_inductive`]; higher-arity queries
/// leave the graph untouched.
pub fn split_queries<R: Rng>(
    g: &Graph,
    queries: &[Query],
    fractions: SplitFractions,
    k_neg: usize,
    eval_neg: usize,
    rng: &mut R,
) -> Result<DataSplit> {
    let arity = queries.first().map(Query::arity).unwrap_or(2);
    for q in queries {
        q.validate(g.node_count())?;
        if q.arity() != arity {
            return Err(Error::validation("query file mixes arities"));
        }
    }
    let mut positives = queries.to_vec();
    let counts = fractions.counts(positives.len())?;
    positives.shuffle(rng);
    positives.truncate(counts.iter().sum());
    let graph = if arity == 2 {
        let hidden: Vec<(NodeId, NodeId)> = positives
            .iter()
            .map(|q| (q.nodes()[0], q.nodes()[1]))
            .filter(|&(u, v)| g.has_edge(u, v))
            .collect();
        g.mask_edges(&hidden)?
    } else {
        g.clone()
    };
    finish(g, graph, positives, counts, k_neg, eval_neg, rng)
}

fn finish<R: Rng>(
    full: &Graph,
    graph: Graph,
    mut positives: Vec<Query>,
    counts: [usize; 3],
    k_neg: usize,
    eval_neg: usize,
    rng: &mut R,
) -> Result<DataSplit> {
    let sampler = NegativeSampler::new(full, &positives);
    let test_pos = positives.split_off(counts[0] + counts[1]);
    let valid_pos = positives.split_off(counts[0]);
    let mut make = |pos: Vec<Query>, k: usize| -> Result<SplitSet> {
        let negatives = sampler.sample(&pos, k, rng)?;
        Ok(SplitSet {
            positives: pos,
            negatives,
            negatives_per_positive: k,
        })
    };
    let train = make(positives, k_neg)?;
    let valid = make(valid_pos, eval_neg)?;
    let test = make(test_pos, eval_neg)?;
    Ok(DataSplit {
        graph,
        train,
        valid,
        test,
    })
}
