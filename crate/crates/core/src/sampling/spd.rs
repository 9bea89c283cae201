use std::collections::{HashMap, VecDeque};

use crate::graph::{Graph, NodeId};
use crate::Result;

/// Shortest-path distance from `u` to each of `members`, by BFS truncated
/// at depth `d_max`. Nodes farther away (or unreachable) get `d_max + 1`.
pub fn spd_encode(g: &Graph, u: NodeId, members: &[NodeId], d_max: u32) -> Result<Vec<f32>> {
    g.check_node(u)?;
    for &x in members {
        g.check_node(x)?;
    }
    let mut dist: HashMap<NodeId, u32> = HashMap::from([(u, 0)]);
    let mut frontier = VecDeque::from([u]);
    while let Some(v) = frontier.pop_front() {
        let d = dist[&v];
        if d == d_max {
            continue;
        }
        for &w in g.adj(v) {
            dist.entry(w).or_insert_with(|| {
                frontier.push_back(w);
                d + 1
            });
        }
    }
    let far = d_max + 1;
    Ok(members
        .iter()
        .map(|x| dist.get(x).copied().unwrap_or(far) as f32)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_with_sentinel() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(
            spd_encode(&g, 0, &[0, 1, 2, 3], 2).unwrap(),
            vec![0.0, 1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn seed_is_zero_and_unreachable_is_far() {
        let g = Graph::from_edges(5, [(0, 1), (3, 4)]).unwrap();
        assert_eq!(
            spd_encode(&g, 1, &[0, 1, 3], 4).unwrap(),
            vec![1.0, 0.0, 5.0]
        );
        assert_eq!(spd_encode(&g, 1, &[1], 0).unwrap(), vec![0.0]);
    }
}
