//! Join throughput over thread counts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{NodeId, Query};
use crate::spg::SpG;
use crate::spjoin::join_batch;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub threads: usize,
    pub queries: usize,
    /// Best wall time over the timed rounds.
    pub seconds: f64,
    pub queries_per_second: f64,
    /// Throughput relative to the first row.
    pub speedup: f64,
    /// Output equal to the first row's output.
    pub identical: bool,
}

/// `count` uniformly random duplicate-free queries of `arity`.
pub fn random_queries(n: usize, arity: usize, count: usize, seed: u64) -> Result<Vec<Query>> {
    if arity < 2 || n < arity {
        return Err(Error::validation(format!(
            "cannot draw arity-{arity} queries from {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut nodes: Vec<NodeId> = Vec::with_capacity(arity);
            while nodes.len() < arity {
                let x = rng.random_range(0..n as NodeId);
                if !nodes.contains(&x) {
                    nodes.push(x);
                }
            }
            Query::new(nodes)
        })
        .collect()
}

/// Times [`join_batch`] over `queries` once per entry of `threads`, keeping
/// the best of `rounds` runs. The first entry is the speedup reference.
pub fn bench_join(
    spg: &SpG,
    queries: &[Query],
    threads: &[usize],
    rounds: usize,
) -> Result<Vec<BenchRow>> {
    if threads.is_empty() || threads.contains(&0) {
        return Err(Error::validation(
            "thread list must be non-empty and positive",
        ));
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(threads.len());
    let mut reference = None;
    for &t in threads {
        let mut best = f64::INFINITY;
        let mut output = None;
        for _ in 0..rounds.max(1) {
            let start = Instant::now();
            let out = join_batch(spg, queries, t)?;
            best = best.min(start.elapsed().as_secs_f64());
            output = Some(out);
        }
        let output = output.expect("at least one round");
        let identical = match &reference {
            None => true,
            Some(r) => *r == output,
        };
        if reference.is_none() {
            reference = Some(output);
        }
        let qps = queries.len() as f64 / best.max(1e-12);
        let speedup = rows.first().map_or(1.0, |r0| qps / r0.queries_per_second);
        rows.push(BenchRow {
            threads: t,
            queries: queries.len(),
            seconds: best,
            queries_per_second: qps,
            speedup,
            identical,
        });
    }
    Ok(rows)
}
