//! Query-level outer join over [`SpG`] rows.
//!
//! For a query `Q = (u_1, …, u_q)` the joined set is `S_Q = ∪ S_{u_j}` and
//! member `x` carries the concatenation of the `q` feature blocks
//! `Z_{u_j, x}`, a zero block whenever `x ∉ S_{u_j}`. Rows are already
//! sorted, so a `q`-way merge produces the result in one pass.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::graph::{NodeId, Query};
use crate::spg::SpG;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct JoinedQuery {
    pub query: Query,
    /// `S_Q`, strictly ascending.
    pub members: Vec<NodeId>,
    /// Per-node feature width.
    pub k: usize,
    /// `|S_Q| × (|Q|·k)`; block `j` of a row belongs to `query.nodes()[j]`.
    pub zq: Vec<f32>,
    /// `|S_Q| × |Q|`; whether block `j` of a row is a real feature row.
    pub presence: Vec<bool>,
}

impl JoinedQuery {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.query.arity()
    }

    /// Width of one feature row, `|Q|·k`.
    pub fn width(&self) -> usize {
        self.arity() * self.k
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let w = self.width();
        &self.zq[i * w..(i + 1) * w]
    }

    pub fn presence_row(&self, i: usize) -> &[bool] {
        let q = self.arity();
        &self.presence[i * q..(i + 1) * q]
    }

    /// Text table, one line per member: id, presence bits, then one
    /// space-separated group per feature block.
    pub fn dump_table(&self) -> String {
        let mut out = String::new();
        let nodes: Vec<String> = self.query.nodes().iter().map(|u| u.to_string()).collect();
        let _ = writeln!(out, "# query {} k={}", nodes.join(","), self.k);
        for i in 0..self.len() {
            let bits: String = self
                .presence_row(i)
                .iter()
                .map(|&p| if p { '1' } else { '0' })
                .collect();
            let _ = write!(out, "{}\t{}", self.members[i], bits);
            for block in self.row(i).chunks(self.k.max(1)) {
                let vals: Vec<String> = block.iter().map(|v| v.to_string()).collect();
                let _ = write!(out, "\t{}", vals.join(" "));
            }
            out.push('\n');
        }
        out
    }
}

fn check_query(spg: &SpG, q: &Query) -> Result<()> {
    q.validate(spg.node_count())
}

/// Merge kernel; `ops` counts cursor inspections.
fn merge(spg: &SpG, q: &Query, ops: &mut usize) -> JoinedQuery {
    let k = spg.feature_dim();
    let arity = q.arity();
    let rows: Vec<(&[NodeId], &[u32])> = q.nodes().iter().map(|&u| spg.row_unchecked(u)).collect();
    let mut pos = vec![0usize; arity];
    let upper: usize = rows.iter().map(|r| r.0.len()).sum();
    let mut members = Vec::with_capacity(upper);
    let mut zq = Vec::with_capacity(upper * arity * k);
    let mut presence = Vec::with_capacity(upper * arity);
    loop {
        let mut head: Option<NodeId> = None;
        for (j, (ids, _)) in rows.iter().enumerate() {
            *ops += 1;
            if let Some(&x) = ids.get(pos[j]) {
                head = Some(head.map_or(x, |h| h.min(x)));
            }
        }
        let Some(x) = head else { break };
        members.push(x);
        for (j, (ids, ptrs)) in rows.iter().enumerate() {
            *ops += 1;
            if ids.get(pos[j]) == Some(&x) {
                zq.extend_from_slice(spg.feature(ptrs[pos[j]]));
                presence.push(true);
                pos[j] += 1;
            } else {
                zq.extend(std::iter::repeat_n(0.0f32, k));
                presence.push(false);
            }
        }
    }
    JoinedQuery {
        query: q.clone(),
        members,
        k,
        zq,
        presence,
    }
}

/// Outer-joins the rows of every node in `q`.
pub fn join(spg: &SpG, q: &Query) -> Result<JoinedQuery> {
    check_query(spg, q)?;
    let mut ops = 0;
    Ok(merge(spg, q, &mut ops))
}

/// [`join`] that also reports the number of cursor inspections performed.
pub fn join_counted(spg: &SpG, q: &Query) -> Result<(JoinedQuery, usize)> {
    check_query(spg, q)?;
    let mut ops = 0;
    let jq = merge(spg, q, &mut ops);
    Ok((jq, ops))
}

/// Join cost of `q`: the summed row lengths of its nodes.
pub fn join_cost(spg: &SpG, q: &Query) -> usize {
    q.nodes()
        .iter()
        .map(|&u| spg.row_unchecked(u).0.len())
        .sum()
}

/// Longest-processing-time partition of items into `groups` bins: items in
/// descending cost order (ties by index) each go to the currently lightest
/// bin (ties by bin index). `groups` of 0 is treated as 1.
pub fn balance_groups(costs: &[usize], groups: usize) -> Vec<Vec<usize>> {
    let groups = groups.max(1);
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by_key(|&i| (Reverse(costs[i]), i));
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..groups).map(|g| Reverse((0, g))).collect();
    let mut out = vec![Vec::new(); groups];
    for i in order {
        let Reverse((load, g)) = heap.pop().expect("at least one group");
        out[g].push(i);
        heap.push(Reverse((load + costs[i], g)));
    }
    out
}

/// Joins a batch of queries with `threads` workers, one per cost-balanced
/// group. Output order follows input order and does not depend on
/// `threads`.
pub fn join_batch(spg: &SpG, queries: &[Query], threads: usize) -> Result<Vec<JoinedQuery>> {
    for (index, q) in queries.iter().enumerate() {
        check_query(spg, q).map_err(|e| Error::Query {
            index,
            source: Box::new(e),
        })?;
    }
    if threads <= 1 || queries.len() < 2 {
        let mut ops = 0;
        return Ok(queries.iter().map(|q| merge(spg, q, &mut ops)).collect());
    }
    let costs: Vec<usize> = queries.iter().map(|q| join_cost(spg, q)).collect();
    let groups = balance_groups(&costs, threads.min(queries.len()));
    let mut slots: Vec<Option<JoinedQuery>> = vec![None; queries.len()];
    std::thread::scope(|s| {
        let handles: Vec<_> = groups
            .iter()
            .filter(|g| !g.is_empty())
            .map(|group| {
                s.spawn(move || {
                    let mut ops = 0;
                    group
                        .iter()
                        .map(|&i| (i, merge(spg, &queries[i], &mut ops)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, jq) in h.join().expect("join worker panicked") {
                slots[i] = Some(jq);
            }
        }
    });
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every query assigned"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::NodeSetSample;
    use crate::spg::build_spg;

    fn spg_from(rows: &[(&[NodeId], &[f32])]) -> SpG {
        let samples: Vec<_> = rows
            .iter()
            .enumerate()
            .map(|(u, (m, f))| NodeSetSample {
                seed: u as NodeId,
                members: m.to_vec(),
                features: f.to_vec(),
                k: 1,
            })
            .collect();
        build_spg(&samples).unwrap()
    }

    #[test]
    fn identical_sets_all_present() {
        let spg = spg_from(&[(&[0, 1], &[1.0, 2.0]), (&[0, 1], &[3.0, 4.0])]);
        let jq = join(&spg, &Query::pair(0, 1).unwrap()).unwrap();
        assert_eq!(jq.members, vec![0, 1]);
        assert!(jq.presence.iter().all(|&p| p));
        assert_eq!(jq.zq, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn member_of_second_set_only_gets_zero_block() {
        // u = 0, v = 1, b = 2 ∈ S_v \ S_u.
        let spg = spg_from(&[
            (&[0, 1], &[5.0, 6.0]),
            (&[1, 2], &[7.0, 8.0]),
            (&[2], &[1.0]),
        ]);
        let jq = join(&spg, &Query::pair(0, 1).unwrap()).unwrap();
        assert_eq!(jq.members, vec![0, 1, 2]);
        assert_eq!(jq.presence_row(2), &[false, true]);
        assert_eq!(jq.row(2), &[0.0, 8.0]);
        assert_eq!(jq.presence_row(0), &[true, false]);
        assert_eq!(jq.row(0), &[5.0, 0.0]);
    }

    #[test]
    fn disjoint_sets() {
        let spg = spg_from(&[(&[0], &[1.0]), (&[1, 2], &[1.0, 2.0]), (&[2], &[1.0])]);
        let jq = join(&spg, &Query::pair(0, 1).unwrap()).unwrap();
        assert_eq!(jq.len(), 3);
        for i in 0..3 {
            assert_eq!(jq.presence_row(i).iter().filter(|&&p| p).count(), 1);
        }
    }

    #[test]
    fn invalid_query_node() {
        let spg = spg_from(&[(&[0], &[1.0]), (&[1], &[1.0])]);
        assert!(join(&spg, &Query::pair(0, 2).unwrap()).is_err());
        match join_batch(
            &spg,
            &[Query::pair(0, 1).unwrap(), Query::pair(1, 5).unwrap()],
            2,
        ) {
            Err(Error::Query { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn loads(costs: &[usize], groups: &[Vec<usize>]) -> Vec<usize> {
        groups
            .iter()
            .map(|g| g.iter().map(|&i| costs[i]).sum())
            .collect()
    }

    #[test]
    fn lpt_examples() {
        let c = [5, 5, 5, 5];
        assert_eq!(loads(&c, &balance_groups(&c, 2)), vec![10, 10]);
        let c = [9, 1, 1, 1];
        assert_eq!(loads(&c, &balance_groups(&c, 2)), vec![9, 3]);
        assert_eq!(balance_groups(&[], 3), vec![Vec::<usize>::new(); 3]);
    }

    #[test]
    fn empty_batch() {
        let spg = spg_from(&[(&[0], &[1.0])]);
        assert!(join_batch(&spg, &[], 8).unwrap().is_empty());
    }

    #[test]
    fn dump_format() {
        let spg = spg_from(&[
            (&[0, 1], &[5.0, 6.0]),
            (&[1, 2], &[7.0, 8.5]),
            (&[2], &[1.0]),
        ]);
        let jq = join(&spg, &Query::pair(1, 0).unwrap()).unwrap();
        assert_eq!(
            jq.dump_table(),
            "# query 1,0 k=1\n0\t01\t0\t5\n1\t11\t7\t6\n2\t10\t8.5\t0\n"
        );
    }
}
