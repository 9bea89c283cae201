//! Text formats: whitespace edge lists and attribute tables.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use super::{Attributes, Graph, NodeId};
use crate::{Error, Result};

/// One significant line of an edge list.
enum EdgeLine {
    Header(usize),
    Edge(u64, u64),
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    let v: i64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("`{tok}` is not an integer node id")))?;
    if v < 0 {
        return Err(Error::validation(format!(
            "line {line}: negative node id {v}"
        )));
    }
    Ok(v as u64)
}

fn edge_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, EdgeLine)>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            return None;
        }
        if let Some(rest) = t.strip_prefix("n=") {
            return Some(
                rest.trim()
                    .parse::<usize>()
                    .map(|n| (lineno, EdgeLine::Header(n)))
                    .map_err(|_| Error::parse(lineno, format!("bad node-count header `{t}`"))),
            );
        }
        let mut toks = t.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Some(Err(Error::parse(lineno, "expected exactly two node ids")));
        };
        Some(
            parse_id(a, lineno)
                .and_then(|u| parse_id(b, lineno).map(|v| (lineno, EdgeLine::Edge(u, v)))),
        )
    })
}

/// Reads a whitespace-separated edge list into a symmetrized simple graph.
///
/// Lines starting with `#` are comments. An optional `n=<count>` line fixes
/// the node count (allowing isolated trailing ids); otherwise it is one more
/// than the largest id seen. Self-loops are dropped. With `dedup` unset a
/// repeated undirected edge is rejected instead of collapsed.
pub fn load_edge_list<R: BufRead>(reader: R, dedup: bool) -> Result<Graph> {
    let mut header: Option<usize> = None;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut max_id: Option<u64> = None;
    for item in edge_lines(reader) {
        let (lineno, line) = item?;
        match line {
            EdgeLine::Header(n) => header = Some(n),
            EdgeLine::Edge(u, v) => {
                if u > NodeId::MAX as u64 || v > NodeId::MAX as u64 {
                    return Err(Error::validation(format!(
                        "line {lineno}: node id exceeds 32-bit range"
                    )));
                }
                max_id = max_id.max(Some(u.max(v)));
                let (u, v) = (u as NodeId, v as NodeId);
                if u == v {
                    continue;
                }
                if !dedup && !seen.insert((u.min(v), u.max(v))) {
                    return Err(Error::validation(format!(
                        "line {lineno}: duplicate edge ({u}, {v})"
                    )));
                }
                edges.push((u, v));
            }
        }
    }
    let inferred = max_id.map_or(0, |m| m as usize + 1);
    let n = match header {
        Some(n) if n < inferred => {
            return Err(Error::validation(format!(
                "header declares {n} nodes but id {} appears",
                inferred - 1
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    Graph::from_edges(n, edges)
}

/// Like [`load_edge_list`] but accepts sparse, arbitrarily large ids and
/// compacts them to dense ids in ascending order of the original id.
/// Returns the graph and the original id of every dense node.
pub fn load_edge_list_remapped<R: BufRead>(reader: R) -> Result<(Graph, Vec<u64>)> {
    let mut raw = Vec::new();
    for item in edge_lines(reader) {
        if let (_, EdgeLine::Edge(u, v)) = item? {
            raw.push((u, v));
        }
    }
    let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > NodeId::MAX as usize {
        return Err(Error::validation(
            "too many distinct node ids for 32-bit indexing",
        ));
    }
    let dense = |x: u64| ids.binary_search(&x).unwrap() as NodeId;
    let g = Graph::from_edges(ids.len(), raw.iter().map(|&(u, v)| (dense(u), dense(v))))?;
    Ok((g, ids))
}

/// Writes the graph as an edge list with an `n=` header, one `u v` line per
/// undirected edge with `u < v`.
pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "n={}", g.node_count())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Reads an attribute table: one whitespace-separated row of reals per node,
/// row index = node id. When `n` is given the row count must match.
pub fn load_attributes<R: BufRead>(reader: R, n: Option<usize>) -> Result<Attributes> {
    let mut dim = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let before = values.len();
        for tok in t.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("`{tok}` is not a number")))?;
            values.push(v);
        }
        let width = values.len() - before;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {d} columns, found {width}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    if let Some(n) = n {
        if rows != n {
            return Err(Error::validation(format!(
                "attribute table has {rows} rows, expected {n}"
            )));
        }
    }
    Attributes::new(dim.unwrap_or(0), values)
}
