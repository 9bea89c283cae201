use std::io::{BufRead, Write};

use super::NodeId;
use crate::{Error, Result};

/// An ordered tuple of at least two distinct nodes.
///
/// Order is significant: joined feature blocks follow it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    nodes: Vec<NodeId>,
}

impl Query {
    pub fn new(nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::validation(format!(
                "query arity must be at least 2, got {}",
                nodes.len()
            )));
        }
        for (i, a) in nodes.iter().enumerate() {
            if nodes[i + 1..].contains(a) {
                return Err(Error::validation(format!("query repeats node {a}")));
            }
        }
        Ok(Self { nodes })
    }

    pub fn pair(u: NodeId, v: NodeId) -> Result<Self> {
        Self::new(vec![u, v])
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn arity(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.nodes.iter().find(|&&u| u as usize >= n) {
            Some(u) => Err(Error::validation(format!(
                "query node {u} out of range for {n} nodes"
            ))),
            None => Ok(()),
        }
    }

    /// Sorted node ids; identifies the query as an unordered set.
    pub fn canonical(&self) -> Vec<NodeId> {
        let mut c = self.nodes.clone();
        c.sort_unstable();
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledQuery {
    pub query: Query,
    pub label: bool,
}

impl LabeledQuery {
    pub fn new(query: Query, label: bool) -> Self {
        Self { query, label }
    }

    pub fn target(&self) -> f64 {
        if self.label {
            1.0
        } else {
            0.0
        }
    }
}

/// Contents of a query file: a fixed arity and optionally one label per query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFile {
    pub arity: usize,
    pub queries: Vec<Query>,
    pub labels: Option<Vec<bool>>,
}

impl QueryFile {
    pub fn labeled(&self) -> Option<Vec<LabeledQuery>> {
        let labels = self.labels.as_ref()?;
        Some(
            self.queries
                .iter()
                .zip(labels)
                .map(|(q, &y)| LabeledQuery::new(q.clone(), y))
                .collect(),
        )
    }
}

/// Parses a query file. The first significant line must be `arity=<k>`;
/// every following line holds `k` ids and, either on all lines or on none,
/// a trailing `0`/`1` label.
pub fn read_queries<R: BufRead>(reader: R) -> Result<QueryFile> {
    let mut arity = None;
    let mut queries = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    let mut labeled: Option<bool> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some(k) = arity else {
            let k = t
                .strip_prefix("arity=")
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::parse(lineno, "expected `arity=<k>` header"))?;
            if k < 2 {
                return Err(Error::validation(format!(
                    "arity must be at least 2, got {k}"
                )));
            }
            arity = Some(k);
            continue;
        };
        let toks: Vec<&str> = t.split_whitespace().collect();
        let has_label = match toks.len() {
            n if n == k => false,
            n if n == k + 1 => true,
            n => {
                return Err(Error::parse(
                    lineno,
                    format!("expected {k} or {} fields, found {n}", k + 1),
                ))
            }
        };
        if *labeled.get_or_insert(has_label) != has_label {
            return Err(Error::parse(
                lineno,
                "label column must be present on all lines or none",
            ));
        }
        let mut nodes = Vec::with_capacity(k);
        for tok in &toks[..k] {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("`{tok}` is not an integer node id")))?;
            if v < 0 || v > NodeId::MAX as i64 {
                return Err(Error::validation(format!(
                    "line {lineno}: node id {v} out of range"
                )));
            }
            nodes.push(v as NodeId);
        }
        if has_label {
            labels.push(match toks[k] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        lineno,
                        format!("label must be 0 or 1, found `{other}`"),
                    ))
                }
            });
        }
        queries.push(Query::new(nodes).map_err(|e| Error::parse(lineno, e.to_string()))?);
    }
    let arity = arity.ok_or_else(|| Error::parse(0, "missing `arity=<k>` header"))?;
    Ok(QueryFile {
        arity,
        queries,
        labels: labeled.unwrap_or(false).then_some(labels),
    })
}

pub fn write_queries<W: Write>(file: &QueryFile, mut w: W) -> Result<()> {
    writeln!(w, "arity={}", file.arity)?;
    for (i, q) in file.queries.iter().enumerate() {
        let ids: Vec<String> = q.nodes().iter().map(u32::to_string).collect();
        match &file.labels {
            Some(l) => writeln!(w, "{} {}", ids.join(" "), u8::from(l[i]))?,
            None => writeln!(w, "{}", ids.join(" "))?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_invariants() {
        assert!(Query::new(vec![1]).is_err());
        assert!(Query::new(vec![1, 2, 1]).is_err());
        let q = Query::new(vec![4, 2, 9]).unwrap();
        assert_eq!(q.canonical(), vec![2, 4, 9]);
        assert!(q.validate(9).is_err());
        assert!(q.validate(10).is_ok());
    }

    #[test]
    fn parse_labeled_file() {
        let f = read_queries("arity=3\n0 1 2 1\n# c\n3 4 5 0\n".as_bytes()).unwrap();
        assert_eq!(f.arity, 3);
        assert_eq!(f.labels, Some(vec![true, false]));
        let mut out = Vec::new();
        write_queries(&f, &mut out).unwrap();
        assert_eq!(read_queries(out.as_slice()).unwrap(), f);
    }

    #[test]
    fn parse_errors() {
        assert!(read_queries("0 1\n".as_bytes()).is_err());
        assert!(read_queries("arity=2\n0 1 1\n2 3\n".as_bytes()).is_err());
        assert!(read_queries("arity=2\n0 1 2 3\n".as_bytes()).is_err());
        assert!(read_queries("arity=2\n0 0\n".as_bytes()).is_err());
        assert!(read_queries("arity=2\n0 1 7\n".as_bytes()).is_err());
    }
}
