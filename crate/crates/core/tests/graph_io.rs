mod common;

use std::collections::BTreeSet;

use common::{edge_set, random_edge_lines, random_graph};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use setgrl_core::graph::{load_edge_list, write_edge_list};
use setgrl_core::Graph;

fn text(lines: &[(u32, u32)]) -> String {
    lines.iter().map(|(u, v)| format!("{u} {v}\n")).collect()
}

#[test]
fn loader_matches_set_reference() {
    let lines = random_edge_lines(3000, 10_000, 11);
    let g = load_edge_list(text(&lines).as_bytes(), true).unwrap();
    let reference = edge_set(&lines);
    assert_eq!(g.arc_count(), 2 * reference.len());
    let max_id = lines.iter().map(|&(u, v)| u.max(v)).max().unwrap();
    assert_eq!(g.node_count(), max_id as usize + 1);
    let loaded: BTreeSet<(u32, u32)> = g.edges().collect();
    assert_eq!(loaded, reference);
}

#[test]
fn symmetry_and_sorted_rows() {
    let g = random_graph(300, 0.03, 5);
    for u in 0..300 {
        let row = g.neighbors(u).unwrap();
        assert!(row.windows(2).all(|w| w[0] < w[1]));
        for &v in row {
            assert_ne!(u, v);
            assert!(g.neighbors(v).unwrap().binary_search(&u).is_ok());
        }
    }
}

#[test]
fn masking_five_percent() {
    let g = random_graph(400, 0.05, 9);
    let mut edges: Vec<(u32, u32)> = g.edges().collect();
    edges.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let hidden = &edges[..edges.len() / 20];
    let masked = g.mask_edges(hidden).unwrap();
    assert_eq!(masked.arc_count(), g.arc_count() - 2 * hidden.len());
    assert_eq!(masked.node_count(), g.node_count());
    let rebuilt =
        Graph::from_edges(g.node_count(), masked.edges().chain(hidden.iter().copied())).unwrap();
    assert_eq!(rebuilt.offsets(), g.offsets());
    assert_eq!(rebuilt.targets(), g.targets());
}

proptest! {
    #[test]
    fn write_then_load_round_trips(
        n in 1u32..60,
        raw in prop::collection::vec((0u32..60, 0u32..60), 0..200),
    ) {
        let edges: Vec<(u32, u32)> = raw.into_iter().map(|(u, v)| (u % n, v % n)).collect();
        let g = Graph::from_edges(n as usize, edges).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = load_edge_list(buf.as_slice(), true).unwrap();
        prop_assert_eq!(back.node_count(), g.node_count());
        prop_assert_eq!(back.offsets(), g.offsets());
        prop_assert_eq!(back.targets(), g.targets());
    }
}
