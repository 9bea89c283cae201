use std::collections::{HashMap, VecDeque};

use super::NodeSetSample;
use crate::graph::{Graph, NodeId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprConfig {
    /// Teleport probability, in `(0, 1]`.
    pub alpha: f64,
    /// Push tolerance; residuals end below `epsilon · degree`.
    pub epsilon: f64,
    /// `K`, number of top-scoring nodes kept.
    pub top_k: usize,
}

impl Default for PprConfig {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            epsilon: 1e-4,
            top_k: 50,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        check_params(self.alpha, self.epsilon)?;
        if self.top_k == 0 {
            return Err(Error::validation("top_k must be at least 1"));
        }
        Ok(())
    }
}

fn check_params(alpha: f64, epsilon: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::validation(format!("alpha {alpha} outside (0, 1]")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::validation(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    Ok(())
}

/// Outcome of a push run: the estimate and the leftover residual, both
/// sparse and sorted by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct PushResult {
    pub estimate: Vec<(NodeId, f64)>,
    pub residual: Vec<(NodeId, f64)>,
    pub pushes: usize,
}

#[derive(Default, Clone, Copy)]
struct Slot {
    estimate: f64,
    residual: f64,
    queued: bool,
    pushed: bool,
}

/// Approximate personalized PageRank of seed `u` by residual push.
///
/// Nodes whose residual reaches `epsilon · degree` are pushed in FIFO
/// order: `alpha` of the residual moves into the estimate, the rest is
/// spread evenly over the neighbours. A degree-0 node keeps its whole
/// residual as estimate. On return every residual is below
/// `epsilon · degree` (zero for degree-0 nodes).
pub fn ppr_push(g: &Graph, u: NodeId, alpha: f64, epsilon: f64) -> Result<PushResult> {
    check_params(alpha, epsilon)?;
    g.check_node(u)?;

    let violates = |v: NodeId, r: f64| {
        let d = g.degree(v);
        if d == 0 {
            r > 0.0
        } else {
            r >= epsilon * d as f64
        }
    };

    let mut slots: HashMap<NodeId, Slot> = HashMap::new();
    let mut queue = VecDeque::new();
    slots.insert(
        u,
        Slot {
            residual: 1.0,
            queued: true,
            ..Slot::default()
        },
    );
    queue.push_back(u);

    // Every push at a node of degree d retires at least alpha·epsilon·d of
    // the unit residual mass.
    let cap = 2 * (1.0 / (alpha * epsilon)).ceil().min(1e15) as usize + 16;
    let mut pushes = 0usize;
    while let Some(v) = queue.pop_front() {
        let slot = slots.get_mut(&v).expect("queued node has a slot");
        slot.queued = false;
        let r = slot.residual;
        if !violates(v, r) {
            continue;
        }
        pushes += 1;
        if pushes > cap {
            return Err(Error::Internal(format!(
                "push from seed {u} exceeded {cap} iterations"
            )));
        }
        slot.residual = 0.0;
        slot.pushed = true;
        let row = g.adj(v);
        if row.is_empty() {
            slot.estimate += r;
            continue;
        }
        slot.estimate += alpha * r;
        let share = (1.0 - alpha) * r / row.len() as f64;
        if share == 0.0 {
            continue;
        }
        for &w in row {
            let s = slots.entry(w).or_default();
            s.residual += share;
            if !s.queued && violates(w, s.residual) {
                s.queued = true;
                queue.push_back(w);
            }
        }
    }

    let mut estimate: Vec<(NodeId, f64)> = slots
        .iter()
        .filter(|(_, s)| s.pushed)
        .map(|(&v, s)| (v, s.estimate))
        .collect();
    let mut residual: Vec<(NodeId, f64)> = slots
        .iter()
        .filter(|(_, s)| s.residual > 0.0)
        .map(|(&v, s)| (v, s.residual))
        .collect();
    estimate.sort_unstable_by_key(|&(v, _)| v);
    residual.sort_unstable_by_key(|&(v, _)| v);
    Ok(PushResult {
        estimate,
        residual,
        pushes,
    })
}

/// Keeps the `K` highest-scoring nodes (ties to the smaller id) plus the
/// seed, with each member's score as its single feature.
pub fn topk_ppr(scores: &[(NodeId, f64)], seed: NodeId, top_k: usize) -> Result<NodeSetSample> {
    if top_k == 0 {
        return Err(Error::validation("top_k must be at least 1"));
    }
    if scores.is_empty() {
        return Err(Error::validation("empty score vector"));
    }
    let mut ranked: Vec<(NodeId, f64)> = scores.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    if !ranked.iter().any(|&(v, _)| v == seed) {
        let own = scores
            .iter()
            .find(|&&(v, _)| v == seed)
            .map_or(0.0, |&(_, s)| s);
        ranked.push((seed, own));
    }
    ranked.sort_unstable_by_key(|&(v, _)| v);
    Ok(NodeSetSample {
        seed,
        members: ranked.iter().map(|&(v, _)| v).collect(),
        features: ranked.iter().map(|&(_, s)| s as f32).collect(),
        k: 1,
    })
}
