//! Synthetic graph generators for desk-scale experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, NodeId};
use crate::{Error, Result};

/// Ring of `n` nodes, each joined to its `neighbors` nearest nodes on
/// either side (degree `2 · neighbors` once `n > 2 · neighbors`).
pub fn ring_lattice(n: usize, neighbors: usize) -> Result<Graph> {
    if n > u32::MAX as usize {
        return Err(Error::validation("too many nodes"));
    }
    let edges = (0..n).flat_map(move |u| {
        (1..=neighbors.min(n / 2)).map(move |j| (u as NodeId, ((u + j) % n) as NodeId))
    });
    Graph::from_edges(n, edges)
}

/// Stochastic block model with `blocks` near-equal contiguous blocks;
/// node `u` belongs to block `u · blocks / n`.
pub fn sbm(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> Result<Graph> {
    if blocks == 0 || blocks > n.max(1) {
        return Err(Error::validation("blocks must lie in [1, n]"));
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::validation(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = |u: usize| u * blocks / n;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block(u) == block(v) { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((u as NodeId, v as NodeId));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Block label of every node under [`sbm`]'s layout.
pub fn sbm_blocks(n: usize, blocks: usize) -> Vec<usize> {
    (0..n).map(|u| u * blocks / n).collect()
}

/// Preferential attachment: starts from a clique on `m + 1` nodes and
/// attaches each new node to `m` distinct existing nodes chosen with
/// probability proportional to degree.
pub fn preferential_attachment(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m == 0 || n <= m {
        return Err(Error::validation("preferential attachment needs 0 < m < n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    // every arc endpoint once, so a uniform pick is degree-proportional
    let mut endpoints: Vec<NodeId> = Vec::new();
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u as NodeId, v as NodeId));
            endpoints.extend([u as NodeId, v as NodeId]);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for u in m + 1..n {
        chosen.clear();
        while chosen.len() < m {
            let v = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        for &v in &chosen {
            edges.push((u as NodeId, v));
            endpoints.extend([u as NodeId, v]);
        }
    }
    Graph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_degrees() {
        let g = ring_lattice(10, 1).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!((0..10).all(|u| g.degree(u) == 2));
        let g = ring_lattice(10, 2).unwrap();
        assert!((0..10).all(|u| g.degree(u) == 4));
        assert_eq!(ring_lattice(3, 5).unwrap().edge_count(), 3);
    }

    #[test]
    fn sbm_density() {
        let g = sbm(400, 4, 0.1, 0.0, 3).unwrap();
        let blocks = sbm_blocks(400, 4);
        assert!(g
            .edges()
            .all(|(u, v)| blocks[u as usize] == blocks[v as usize]));
        // 4 · C(100, 2) · 0.1 = 1980 expected edges
        let e = g.edge_count() as f64;
        assert!((e - 1980.0).abs() < 200.0, "{e}");
        assert_eq!(sbm(400, 4, 0.1, 0.0, 3).unwrap().targets(), g.targets());
        assert!(sbm(10, 0, 0.1, 0.1, 0).is_err());
        assert!(sbm(10, 2, 1.5, 0.1, 0).is_err());
    }

    #[test]
    fn preferential_attachment_counts() {
        let g = preferential_attachment(500, 3, 1).unwrap();
        assert_eq!(g.edge_count(), 6 + 3 * (500 - 4));
        assert!((0..500).all(|u| g.degree(u) >= 3));
        let max = (0..500).map(|u| g.degree(u)).max().unwrap();
        assert!(max > 20, "expected a hub, max degree {max}");
        assert!(preferential_attachment(3, 3, 0).is_err());
    }
}
