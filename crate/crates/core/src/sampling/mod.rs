//! Offline per-seed set samplers and structure encoders.
//!
//! A sampler picks a unique node set `S_u` around every seed `u`; a
//! structure encoder attaches a `k`-wide feature row to every member.
//! Results are independent per seed, so [`sample_all`] fans seeds out over
//! worker threads with a per-seed RNG stream and still produces identical
//! output for any thread count.

mod ppr;
mod spd;
mod walk;

pub use ppr::{ppr_push, topk_ppr, PprConfig, PushResult};
pub use spd::spd_encode;
pub use walk::{normalize_lp, sample_walks, WalkConfig, MAX_WALKS};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::{Graph, NodeId};
use crate::{Error, Result};

/// A seed's sampled node set and the structural feature row of each member.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSetSample {
    pub seed: NodeId,
    /// Strictly ascending, always contains `seed`.
    pub members: Vec<NodeId>,
    /// `members.len() × k`, row-major, row order follows `members`.
    pub features: Vec<f32>,
    pub k: usize,
}

impl NodeSetSample {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn feature_row(&self, i: usize) -> &[f32] {
        &self.features[i * self.k..(i + 1) * self.k]
    }

    /// Feature row of node `x`, if it is a member.
    pub fn features_of(&self, x: NodeId) -> Option<&[f32]> {
        self.members
            .binary_search(&x)
            .ok()
            .map(|i| self.feature_row(i))
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "members of seed {} not strictly ascending",
                self.seed
            )));
        }
        if self.members.binary_search(&self.seed).is_err() {
            return Err(Error::validation(format!(
                "seed {} missing from its own set",
                self.seed
            )));
        }
        if self.features.len() != self.members.len() * self.k {
            return Err(Error::validation(format!(
                "seed {}: {} feature values for {} members of width {}",
                self.seed,
                self.features.len(),
                self.members.len(),
                self.k
            )));
        }
        Ok(())
    }
}

/// Which set sampler picks `S_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetSampler {
    Walk(WalkConfig),
    Ppr(PprConfig),
}

/// Which structural feature describes each member relative to the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureEncoder {
    /// Per-step landing counts of the walk sampler (`k = m + 1`).
    Lp,
    /// Truncated shortest-path distance (`k = 1`).
    Spd { d_max: u32 },
    /// Approximate PPR score of the PPR sampler (`k = 1`).
    Ppr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub sampler: SetSampler,
    pub encoder: StructureEncoder,
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        match (&self.sampler, &self.encoder) {
            (SetSampler::Walk(w), StructureEncoder::Lp | StructureEncoder::Spd { .. }) => {
                w.validate()
            }
            (SetSampler::Ppr(p), StructureEncoder::Ppr | StructureEncoder::Spd { .. }) => {
                p.validate()
            }
            (SetSampler::Walk(_), StructureEncoder::Ppr) => {
                Err(Error::validation("PPR features require the PPR sampler"))
            }
            (SetSampler::Ppr(_), StructureEncoder::Lp) => {
                Err(Error::validation("LP features require the walk sampler"))
            }
        }
    }

    /// Feature width `k` produced by this combination.
    pub fn feature_dim(&self) -> usize {
        match (&self.sampler, &self.encoder) {
            (SetSampler::Walk(w), StructureEncoder::Lp) => w.num_steps as usize + 1,
            _ => 1,
        }
    }

    /// Multiplier mapping stored features into model input space: LP counts
    /// become landing probabilities, SPD distances land in `[0, 1]`.
    pub fn feature_scale(&self) -> f64 {
        match (&self.sampler, &self.encoder) {
            (SetSampler::Walk(w), StructureEncoder::Lp) => 1.0 / w.num_walks as f64,
            (_, StructureEncoder::Spd { d_max }) => 1.0 / (*d_max as f64 + 1.0),
            _ => 1.0,
        }
    }
}

/// RNG stream for seed node `u`: the run seed keys a ChaCha8 generator and
/// the node id selects its stream, so streams never overlap across seeds.
pub fn seed_rng(rng_seed: u64, u: NodeId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(u as u64);
    rng
}

/// Samples a single seed according to `spec`.
pub fn sample_one(g: &Graph, u: NodeId, spec: &SamplerSpec) -> Result<NodeSetSample> {
    g.check_node(u)?;
    let mut sample = match spec.sampler {
        SetSampler::Walk(cfg) => sample_walks(g, u, &cfg)?,
        SetSampler::Ppr(cfg) => {
            let push = ppr_push(g, u, cfg.alpha, cfg.epsilon)?;
            topk_ppr(&push.estimate, u, cfg.top_k)?
        }
    };
    if let StructureEncoder::Spd { d_max } = spec.encoder {
        sample.features = spd_encode(g, u, &sample.members, d_max)?;
        sample.k = 1;
    }
    Ok(sample)
}

/// Samples every node of `g` with `threads` workers. Output is indexed by
/// seed and identical for every thread count.
pub fn sample_all(g: &Graph, spec: &SamplerSpec, threads: usize) -> Result<Vec<NodeSetSample>> {
    spec.validate()?;
    let n = g.node_count() as NodeId;
    let run = || -> Vec<Result<NodeSetSample>> {
        (0..n)
            .into_par_iter()
            .map(|u| {
                sample_one(g, u, spec).map_err(|e| Error::Seed {
                    seed: u,
                    source: Box::new(e),
                })
            })
            .collect()
    };
    let results = if threads <= 1 {
        (0..n)
            .map(|u| {
                sample_one(g, u, spec).map_err(|e| Error::Seed {
                    seed: u,
                    source: Box::new(e),
                })
            })
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(run)
    };
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk_spec(m: u32, big_m: u32) -> SamplerSpec {
        SamplerSpec {
            sampler: SetSampler::Walk(WalkConfig {
                num_walks: big_m,
                num_steps: m,
                rng_seed: 7,
            }),
            encoder: StructureEncoder::Lp,
        }
    }

    #[test]
    fn edgeless_graph_gives_singletons() {
        let g = Graph::empty(5);
        let out = sample_all(&g, &walk_spec(3, 10), 1).unwrap();
        assert_eq!(out.len(), 5);
        for (u, s) in out.iter().enumerate() {
            assert_eq!(s.members, vec![u as NodeId]);
            assert_eq!(s.features, vec![10.0; 4]);
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let edges: Vec<(u32, u32)> = (0..60)
            .flat_map(|i| [(i, (i * 7 + 3) % 60), (i, (i + 1) % 60)])
            .collect();
        let g = Graph::from_edges(60, edges).unwrap();
        for spec in [
            walk_spec(4, 50),
            SamplerSpec {
                sampler: SetSampler::Ppr(PprConfig::default()),
                encoder: StructureEncoder::Ppr,
            },
            SamplerSpec {
                sampler: SetSampler::Walk(WalkConfig {
                    num_walks: 20,
                    num_steps: 3,
                    rng_seed: 1,
                }),
                encoder: StructureEncoder::Spd { d_max: 3 },
            },
        ] {
            let a = sample_all(&g, &spec, 1).unwrap();
            let b = sample_all(&g, &spec, 8).unwrap();
            assert_eq!(a, b);
            for s in &a {
                s.validate().unwrap();
            }
        }
    }

    #[test]
    fn rejects_mismatched_encoder() {
        let spec = SamplerSpec {
            sampler: SetSampler::Ppr(PprConfig::default()),
            encoder: StructureEncoder::Lp,
        };
        assert!(sample_all(&Graph::empty(2), &spec, 1).is_err());
    }

    #[test]
    fn ring_lattice_duplication_bound() {
        // Degree-2 ring: an m-step walk reaches at most 2m+1 distinct nodes.
        let n = 200u32;
        let g = Graph::from_edges(n as usize, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        let out = sample_all(&g, &walk_spec(4, 200), 1).unwrap();
        for s in &out {
            assert!(s.len() <= 9);
        }
    }
}
