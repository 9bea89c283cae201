use rand::Rng;

use super::{seed_rng, NodeSetSample};
use crate::graph::{Graph, NodeId};
use crate::{Error, Result};

/// Landing counts are stored as exact integers in 32-bit floats, which caps
/// the walk count at 2^24.
pub const MAX_WALKS: u32 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    /// `M`, walks per seed.
    pub num_walks: u32,
    /// `m`, steps per walk.
    pub num_steps: u32,
    pub rng_seed: u64,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_walks == 0 || self.num_steps == 0 {
            return Err(Error::validation(
                "walk count and step count must be at least 1",
            ));
        }
        if self.num_walks > MAX_WALKS {
            return Err(Error::validation(format!("walk count above {MAX_WALKS}")));
        }
        Ok(())
    }
}

/// Runs `M` uniform `m`-step walks from `u` and returns the unique visited
/// nodes with their per-step landing counts (`k = m + 1`, step 0 included).
///
/// A walker on a degree-0 node stays there, so every step column sums to `M`.
pub fn sample_walks(g: &Graph, u: NodeId, cfg: &WalkConfig) -> Result<NodeSetSample> {
    cfg.validate()?;
    g.check_node(u)?;
    let steps = cfg.num_steps as usize;
    let k = steps + 1;
    let mut rng = seed_rng(cfg.rng_seed, u);

    // (node, step) landing events; step 0 is the seed for every walk.
    let mut landings: Vec<(NodeId, u32)> = Vec::with_capacity(cfg.num_walks as usize * k);
    for _ in 0..cfg.num_walks {
        let mut at = u;
        landings.push((at, 0));
        for step in 1..=steps {
            let row = g.adj(at);
            if !row.is_empty() {
                at = row[rng.random_range(0..row.len())];
            }
            landings.push((at, step as u32));
        }
    }
    landings.sort_unstable();

    let mut members: Vec<NodeId> = Vec::new();
    let mut features: Vec<f32> = Vec::new();
    for &(x, step) in &landings {
        if members.last() != Some(&x) {
            members.push(x);
            features.extend(std::iter::repeat_n(0.0, k));
        }
        let base = features.len() - k;
        features[base + step as usize] += 1.0;
    }
    Ok(NodeSetSample {
        seed: u,
        members,
        features,
        k,
    })
}

/// Turns landing counts into landing probabilities by dividing by the walk
/// count.
pub fn normalize_lp(counts: &[f32], num_walks: u32) -> Result<Vec<f64>> {
    if num_walks == 0 {
        return Err(Error::validation("walk count must be positive"));
    }
    if let Some(c) = counts
        .iter()
        .find(|&&c| !(0.0..=num_walks as f32).contains(&c))
    {
        return Err(Error::validation(format!(
            "landing count {c} outside [0, {num_walks}]"
        )));
    }
    let m = num_walks as f64;
    Ok(counts.iter().map(|&c| c as f64 / m).collect())
}
