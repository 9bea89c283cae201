//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setgrl_core::model::{batch_loss, loss_and_grad, Aggr, ModelParams, ModelShape, SetInput};

/// A random model and batch for gradient checks. Some member rows repeat
/// so that deduplicated encoding is exercised.
pub fn gradient_case(seed: u64, aggr: Aggr) -> (ModelParams, Vec<(SetInput, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = ModelShape {
        arity: rng.random_range(2..=3),
        k: rng.random_range(1..=4),
        attr_dim: rng.random_range(0..=2),
        hidden: rng.random_range(3..=8),
        aggr,
    };
    let params = ModelParams::init(&shape, seed ^ 0xABCD).unwrap();
    let dim = shape.input_dim();
    let batch = (0..rng.random_range(2..=5))
        .map(|_| {
            let distinct = rng.random_range(1..=5);
            let base: Vec<f64> = (0..distinct * dim)
                .map(|_| rng.random_range(-1.5..1.5))
                .collect();
            let mut rows = base.clone();
            for _ in 0..rng.random_range(0..=3) {
                let r = rng.random_range(0..distinct);
                rows.extend_from_slice(&base[r * dim..(r + 1) * dim]);
            }
            let y = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
            (SetInput::from_rows(dim, rows).unwrap(), y)
        })
        .collect();
    (params, batch)
}

/// Central finite differences of the mean batch loss with respect to every
/// parameter, flattened in tensor order.
pub fn numeric_gradient(params: &ModelParams, batch: &[(SetInput, f64)], step: f64) -> Vec<f64> {
    let refs: Vec<(&SetInput, f64)> = batch.iter().map(|(x, y)| (x, *y)).collect();
    let mut out = Vec::new();
    let mut p = params.clone();
    let sizes: Vec<usize> = p.tensors_mut().iter().map(|t| t.len()).collect();
    for (t, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let orig = p.tensors_mut()[t][i];
            p.tensors_mut()[t][i] = orig + step;
            let plus = batch_loss(&p, &refs).unwrap();
            p.tensors_mut()[t][i] = orig - step;
            let minus = batch_loss(&p, &refs).unwrap();
            p.tensors_mut()[t][i] = orig;
            out.push((plus - minus) / (2.0 * step));
        }
    }
    out
}

pub fn analytic_gradient(params: &ModelParams, batch: &[(SetInput, f64)]) -> Vec<f64> {
    let refs: Vec<(&SetInput, f64)> = batch.iter().map(|(x, y)| (x, *y)).collect();
    let (_, grad) = loss_and_grad::<ChaCha8Rng>(params, &refs, None).unwrap();
    grad.tensors()
        .iter()
        .flat_map(|(t, _)| t.iter().copied())
        .collect()
}

/// Largest `|a − n| / max(|a|, |n|, floor)` over all entries.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use setgrl_core::graph::NodeId;
use setgrl_core::sampling::NodeSetSample;
use setgrl_core::spg::SpG;
use setgrl_core::Graph;

/// Erdős–Rényi style edge list with `m` draws (duplicates, loops and both
/// orientations included on purpose).
pub fn random_edge_lines(n: u32, m: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect()
}

/// Unique undirected non-loop pairs of an edge list.
pub fn edge_set(lines: &[(u32, u32)]) -> BTreeSet<(u32, u32)> {
    lines
        .iter()
        .filter(|(u, v)| u != v)
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect()
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Row-stochastic uniform-walk transition matrix; degree-0 rows stay put.
#[allow(clippy::needless_range_loop)]
pub fn transition_matrix(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut p = vec![vec![0.0; n]; n];
    for u in 0..n {
        let nb = g.neighbors(u as NodeId).unwrap();
        if nb.is_empty() {
            p[u][u] = 1.0;
        }
        for &v in nb {
            p[u][v as usize] = 1.0 / nb.len() as f64;
        }
    }
    p
}

/// Distribution of a walk from `u` after each of `0..=steps` steps.
pub fn markov_powers(g: &Graph, u: usize, steps: usize) -> Vec<Vec<f64>> {
    let p = transition_matrix(g);
    let n = g.node_count();
    let mut dist = vec![0.0; n];
    dist[u] = 1.0;
    let mut out = vec![dist.clone()];
    for _ in 0..steps {
        let mut next = vec![0.0; n];
        for (x, &mass) in dist.iter().enumerate() {
            for (y, &pxy) in p[x].iter().enumerate() {
                next[y] += mass * pxy;
            }
        }
        dist = next;
        out.push(dist.clone());
    }
    out
}

/// Personalized PageRank `π = α e_u + (1 − α) π P` by power iteration,
/// with degree-0 nodes holding a self-loop in `P`.
pub fn dense_ppr(g: &Graph, u: usize, alpha: f64, tol: f64) -> Vec<f64> {
    let p = transition_matrix(g);
    let n = g.node_count();
    let mut pi = vec![0.0; n];
    pi[u] = 1.0;
    loop {
        let mut next = vec![0.0; n];
        next[u] = alpha;
        for x in 0..n {
            if pi[x] == 0.0 {
                continue;
            }
            for (y, &pxy) in p[x].iter().enumerate() {
                next[y] += (1.0 - alpha) * pi[x] * pxy;
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < tol {
            return pi;
        }
    }
}

/// Seed plus the `k` best-scored nodes after a full sort (score descending,
/// id ascending), returned ascending by id.
pub fn topk_by_sort(scores: &[(NodeId, f64)], seed: NodeId, k: usize) -> Vec<NodeId> {
    let mut all = scores.to_vec();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut out: BTreeSet<NodeId> = all.iter().take(k).map(|e| e.0).collect();
    out.insert(seed);
    out.into_iter().collect()
}

/// Unit-weight Dijkstra distances from `u`; `None` when unreachable.
pub fn dijkstra(g: &Graph, u: NodeId) -> Vec<Option<u64>> {
    let n = g.node_count();
    let mut dist: Vec<Option<u64>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[u as usize] = Some(0);
    heap.push(Reverse((0u64, u)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if dist[x as usize].is_some_and(|best| d > best) {
            continue;
        }
        for &y in g.neighbors(x).unwrap() {
            let nd = d + 1;
            if dist[y as usize].is_none_or(|best| nd < best) {
                dist[y as usize] = Some(nd);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    dist
}

/// Random samples for `n` seeds: each seed gets itself plus a random subset
/// of nodes, with feature rows drawn from a small alphabet so that rows
/// repeat across seeds.
pub fn random_samples(n: usize, k: usize, max_extra: usize, seed: u64) -> Vec<NodeSetSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as NodeId)
        .map(|u| {
            let mut members: BTreeSet<NodeId> = BTreeSet::from([u]);
            for _ in 0..rng.random_range(0..=max_extra) {
                members.insert(rng.random_range(0..n as NodeId));
            }
            let members: Vec<NodeId> = members.into_iter().collect();
            let features = (0..members.len() * k)
                .map(|_| rng.random_range(0..4) as f32)
                .collect();
            NodeSetSample {
                seed: u,
                members,
                features,
                k,
            }
        })
        .collect()
}

/// Outer join by nested maps: node → per-query-position feature row.
pub struct NaiveJoin {
    pub members: Vec<NodeId>,
    pub rows: Vec<Vec<f32>>,
    pub presence: Vec<Vec<bool>>,
}

pub fn naive_join(samples: &[NodeSetSample], query: &[NodeId]) -> NaiveJoin {
    let k = samples[0].k;
    let mut table: BTreeMap<NodeId, Vec<Option<Vec<f32>>>> = BTreeMap::new();
    for (j, &u) in query.iter().enumerate() {
        let s = &samples[u as usize];
        for (i, &x) in s.members.iter().enumerate() {
            table.entry(x).or_insert_with(|| vec![None; query.len()])[j] =
                Some(s.feature_row(i).to_vec());
        }
    }
    let mut out = NaiveJoin {
        members: Vec::new(),
        rows: Vec::new(),
        presence: Vec::new(),
    };
    for (x, blocks) in table {
        out.members.push(x);
        out.presence
            .push(blocks.iter().map(Option::is_some).collect());
        out.rows.push(
            blocks
                .into_iter()
                .flat_map(|b| b.unwrap_or_else(|| vec![0.0; k]))
                .collect(),
        );
    }
    out
}

/// Reconstructs `(members, features)` of row `u` from the raw SpG arrays.
pub fn spg_row(spg: &SpG, u: usize) -> (Vec<NodeId>, Vec<f32>) {
    let (lo, hi) = (spg.indptr()[u] as usize, spg.indptr()[u + 1] as usize);
    let k = spg.feature_dim();
    let members = spg.indices()[lo..hi].to_vec();
    let features = spg.sfptr()[lo..hi]
        .iter()
        .flat_map(|&p| spg.bank()[p as usize * k..(p as usize + 1) * k].to_vec())
        .collect();
    (members, features)
}

/// MRR and Hits@P by sorting each candidate list: the positive's tie group
/// spans positions `[first, last]` (1-based); MRR uses the midpoint and
/// Hits@P the last position.
pub fn sorted_rank_metrics(cases: &[(f64, Vec<f64>)], p: usize) -> (f64, f64) {
    let mut mrr = 0.0;
    let mut hits = 0.0;
    for (pos, negs) in cases {
        let mut all: Vec<(f64, bool)> = negs.iter().map(|&s| (s, false)).collect();
        all.push((*pos, true));
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let first = all.iter().position(|e| e.0 == *pos).unwrap() + 1;
        let last = all.iter().rposition(|e| e.0 == *pos).unwrap() + 1;
        mrr += 1.0 / ((first + last) as f64 / 2.0);
        if last <= p {
            hits += 1.0;
        }
    }
    (mrr / cases.len() as f64, hits / cases.len() as f64)
}

/// AUC as the fraction of (positive, negative) pairs ordered correctly,
/// ties counting one half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut good = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                good += 1.0;
            } else if si == sj {
                good += 0.5;
            }
        }
    }
    good / pairs
}
