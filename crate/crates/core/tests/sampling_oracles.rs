mod common;

use common::{dense_ppr, dijkstra, markov_powers, random_graph, topk_by_sort};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setgrl_core::graph::NodeId;
use setgrl_core::sampling::{
    normalize_lp, ppr_push, sample_walks, spd_encode, topk_ppr, WalkConfig,
};
use setgrl_core::Graph;

/// Fraction of (node, step) entries within `4·sqrt(p(1−p)/M)` of the exact
/// landing probability; entries with p ∈ {0, 1} must match exactly.
#[allow(clippy::needless_range_loop)]
fn lp_agreement(g: &Graph, u: NodeId, m: u32, big_m: u32, seed: u64) -> f64 {
    let s = sample_walks(
        g,
        u,
        &WalkConfig {
            num_walks: big_m,
            num_steps: m,
            rng_seed: seed,
        },
    )
    .unwrap();
    let exact = markov_powers(g, u as usize, m as usize);
    let k = (m + 1) as usize;
    let mut ok = 0usize;
    let mut total = 0usize;
    for x in 0..g.node_count() {
        let row = s.features_of(x as NodeId);
        for step in 0..k {
            let p = exact[step][x];
            let freq = row.map_or(0.0, |r| r[step] as f64 / big_m as f64);
            let tol = 4.0 * (p * (1.0 - p) / big_m as f64).sqrt();
            total += 1;
            if (freq - p).abs() <= tol {
                ok += 1;
            }
        }
    }
    ok as f64 / total as f64
}

#[test]
fn triangle_landing_frequencies() {
    let g = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
    assert_eq!(lp_agreement(&g, 0, 4, 10_000, 3), 1.0);
}

#[test]
fn small_graph_landing_frequencies() {
    let mut ok = 0.0;
    let mut cases = 0.0;
    for seed in 0..10 {
        let g = random_graph(15, 0.25, seed);
        for u in 0..15 {
            ok += lp_agreement(&g, u, 3, 10_000, seed * 100 + u as u64);
            cases += 1.0;
        }
    }
    assert!(ok / cases >= 0.99, "agreement {}", ok / cases);
}

#[test]
fn normalized_columns_sum_to_one() {
    let g = random_graph(80, 0.06, 2);
    for u in 0..80 {
        let s = sample_walks(
            &g,
            u,
            &WalkConfig {
                num_walks: 37,
                num_steps: 5,
                rng_seed: 8,
            },
        )
        .unwrap();
        let lp = normalize_lp(&s.features, 37).unwrap();
        for step in 0..s.k {
            let col: f64 = (0..s.len()).map(|i| lp[i * s.k + step]).sum();
            assert!((col - 1.0).abs() <= 1e-12);
        }
    }
    assert!(normalize_lp(&[1.0], 0).is_err());
}

#[test]
fn push_matches_power_iteration() {
    let eps = 1e-8;
    for seed in 0..4 {
        let g = random_graph(50, 0.08, seed);
        for u in (0..50).step_by(7) {
            if g.degree(u) == 0 {
                continue;
            }
            let exact = dense_ppr(&g, u as usize, 0.15, 1e-14);
            let push = ppr_push(&g, u, 0.15, eps).unwrap();
            let mut approx = vec![0.0; 50];
            for &(v, p) in &push.estimate {
                assert!(p >= 0.0);
                approx[v as usize] = p;
            }
            for v in 0..50 {
                let err = (approx[v] - exact[v]).abs();
                assert!(
                    err <= eps * g.degree(v as NodeId) as f64 + 1e-12,
                    "seed {seed} u {u} v {v}: {err}"
                );
            }
            for &(v, r) in &push.residual {
                assert!(r < eps * g.degree(v) as f64);
            }
        }
    }
}

#[test]
fn topk_matches_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let n = rng.random_range(1..40u32);
        let mut ids: Vec<NodeId> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
        let seed = rng.random_range(0..n);
        if !ids.contains(&seed) {
            ids.push(seed);
        }
        // coarse scores force ties
        let scores: Vec<(NodeId, f64)> = ids
            .iter()
            .map(|&v| (v, rng.random_range(0..5) as f64 / 4.0))
            .collect();
        let k = rng.random_range(1..12);
        let got = topk_ppr(&scores, seed, k).unwrap();
        assert_eq!(got.members, topk_by_sort(&scores, seed, k));
        assert!(got.len() <= k + 1);
        for (i, &x) in got.members.iter().enumerate() {
            let s = scores.iter().find(|e| e.0 == x).unwrap().1;
            assert_eq!(got.feature_row(i), &[s as f32]);
        }
    }
}

#[test]
fn spd_matches_dijkstra() {
    for seed in 0..5 {
        let g = random_graph(120, 0.02, seed);
        let members: Vec<NodeId> = (0..120).collect();
        for u in (0..120).step_by(13) {
            for d_max in [1u32, 2, 4] {
                let f = spd_encode(&g, u, &members, d_max).unwrap();
                let dist = dijkstra(&g, u);
                for x in 0..120 {
                    let expect = dist[x].map_or(d_max + 1, |d| (d as u32).min(d_max + 1));
                    assert_eq!(f[x], expect as f32);
                }
            }
        }
    }
}

fn reachable_within(g: &Graph, u: NodeId, steps: u32) -> usize {
    dijkstra(g, u)
        .iter()
        .filter(|d| d.is_some_and(|d| d <= steps as u64))
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walk_sample_invariants(
        n in 1usize..30,
        p in 0.0f64..0.4,
        gseed in any::<u64>(),
        big_m in 1u32..40,
        m in 1u32..5,
        rng_seed in any::<u64>(),
    ) {
        let g = random_graph(n, p, gseed);
        let cfg = WalkConfig { num_walks: big_m, num_steps: m, rng_seed };
        for u in 0..n as NodeId {
            let s = sample_walks(&g, u, &cfg).unwrap();
            prop_assert!(s.validate().is_ok());
            prop_assert!(s.members.binary_search(&u).is_ok());
            prop_assert_eq!(s.k, m as usize + 1);
            prop_assert_eq!(s.features_of(u).unwrap()[0], big_m as f32);
            for step in 0..s.k {
                let mass: f32 = (0..s.len()).map(|i| s.feature_row(i)[step]).sum();
                prop_assert_eq!(mass, big_m as f32);
            }
            let bound = ((m * big_m + 1) as usize).min(reachable_within(&g, u, m));
            prop_assert!(s.len() <= bound);
        }
    }
}
