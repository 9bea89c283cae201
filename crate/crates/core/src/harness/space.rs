//! Set-size, duplication and storage report.

use serde::Serialize;

use crate::sampling::{NodeSetSample, SamplerSpec, SetSampler};
use crate::spg::{build_spg, SpgStats};
use crate::Result;

/// Distribution summary of per-seed set sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeSummary {
    pub min: usize,
    pub p50: usize,
    pub p90: usize,
    pub p99: usize,
    pub max: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceReport {
    pub n: usize,
    /// `m · M`, walk positions visited per seed (walk sampler only).
    pub walk_nodes_per_seed: Option<u64>,
    pub set_sizes: SizeSummary,
    /// `Σ |S_u|`.
    pub total_set_size: usize,
    /// `1 − Σ|S_u| / (n · (m·M + 1))` (walk sampler only).
    pub duplication_rate: Option<f64>,
    pub spg: SpgStats,
}

fn summarize(mut sizes: Vec<usize>) -> SizeSummary {
    if sizes.is_empty() {
        return SizeSummary {
            min: 0,
            p50: 0,
            p90: 0,
            p99: 0,
            max: 0,
            mean: 0.0,
        };
    }
    sizes.sort_unstable();
    let q = |p: f64| sizes[((sizes.len() - 1) as f64 * p).round() as usize];
    SizeSummary {
        min: sizes[0],
        p50: q(0.5),
        p90: q(0.9),
        p99: q(0.99),
        max: sizes[sizes.len() - 1],
        mean: sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
    }
}

/// Builds the report from samples produced with `spec`.
pub fn report_space(samples: &[NodeSetSample], spec: &SamplerSpec) -> Result<SpaceReport> {
    let n = samples.len();
    let sizes: Vec<usize> = samples.iter().map(NodeSetSample::len).collect();
    let total: usize = sizes.iter().sum();
    let walk_nodes = match &spec.sampler {
        SetSampler::Walk(w) => Some(w.num_walks as u64 * w.num_steps as u64),
        SetSampler::Ppr(_) => None,
    };
    let duplication_rate = walk_nodes
        .filter(|_| n > 0)
        .map(|w| 1.0 - total as f64 / (n as f64 * (w as f64 + 1.0)));
    Ok(SpaceReport {
        n,
        walk_nodes_per_seed: walk_nodes,
        set_sizes: summarize(sizes),
        total_set_size: total,
        duplication_rate,
        spg: build_spg(samples)?.stats(),
    })
}
