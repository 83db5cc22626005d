//! Line-based topology format: a header `graph n` or `bipartite nA nB`,
//! then one `u v` edge per line. Blank lines and `#` comments are ignored.
//! Parallel edges are written as repeated lines.

use std::fmt::Write as _;

use super::{Partition, Topology, TopologyError, TopologyKind};

pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let parse_err = |line: usize, msg: String| TopologyError::Parse { line, msg };
    let num = |line: usize, tok: Option<&str>| -> Result<usize, TopologyError> {
        let tok = tok.ok_or_else(|| parse_err(line, "missing number".into()))?;
        tok.parse()
            .map_err(|_| parse_err(line, format!("expected a non-negative integer, got `{tok}`")))
    };

    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty topology".into()))?;
    let mut toks = header.split_whitespace();
    let (n, partition) = match toks.next() {
        Some("graph") => (num(line, toks.next())?, None),
        Some("bipartite") => {
            let n_a = num(line, toks.next())?;
            let n_b = num(line, toks.next())?;
            (n_a + n_b, Some(Partition { n_a, n_b }))
        }
        other => {
            return Err(parse_err(
                line,
                format!("expected `graph n` or `bipartite nA nB`, got `{}`", other.unwrap_or("")),
            ))
        }
    };
    if toks.next().is_some() {
        return Err(parse_err(line, "trailing tokens in header".into()));
    }
    let mut edges = Vec::new();
    for (line, body) in lines {
        let mut toks = body.split_whitespace();
        let u = num(line, toks.next())?;
        let v = num(line, toks.next())?;
        if toks.next().is_some() {
            return Err(parse_err(line, "expected exactly two node indices".into()));
        }
        if u >= n || v >= n {
            return Err(parse_err(line, format!("node index out of range 0..{n}")));
        }
        edges.push((u, v));
    }
    Topology::from_edges(TopologyKind::Explicit, n, partition, edges)
}

pub fn write_topology(g: &Topology) -> String {
    let mut out = String::new();
    match g.partition() {
        Some(p) => writeln!(out, "bipartite {} {}", p.n_a, p.n_b),
        None => writeln!(out, "graph {}", g.node_count()),
    }
    .expect("writing to a String");
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").expect("writing to a String");
    }
    out
}
