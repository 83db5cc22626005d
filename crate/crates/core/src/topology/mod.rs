//! Graph families the protocols run on, plus the bounded-degree analytics.
//!
//! Node indices are dense `0..n`. For partitioned graphs side A (also called
//! side 0) occupies `0..n_a` and side B (side 1) occupies `n_a..n_a + n_b`.
//!
//! Adjacency is stored as sorted neighbor lists carrying edge multiplicities.
//! Every family except the butterfly-derived ones is simple; the wrapped
//! 2-butterfly and every bipartite simulation of a butterfly have parallel
//! edges (straight edges of different layer pairs land on the same node pair),
//! and keeping the multiplicity is what makes them 4- and 2r-regular.

mod butterfly;
mod npc;
mod random;
mod spectral;
mod text;

use std::collections::VecDeque;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use butterfly::{build_butterfly, butterfly_to_bipartite, BipartiteSimulation, ButterflyNode};
pub use npc::{npc_sets, NpcResult, Ratio};
pub use random::random_biregular;
pub use spectral::{
    edge_count_bound_check, mu_bound, spectral_report, symmetric_eigenvalues, EdgeCountCheck, EdgeCountChecker,
    SpectralReport,
};
pub use text::{parse_topology, write_topology};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(NodeId, NodeId, usize),
    #[error("edge ({0}, {1}) does not cross the bipartition")]
    NotCrossing(NodeId, NodeId),
    #[error("butterfly requires an even r >= 2, got {0}")]
    InvalidButterflyOrder(u32),
    #[error("input is not a butterfly topology")]
    NotButterfly,
    #[error("topology is not bipartite")]
    NotBipartite,
    #[error("topology is not biregular: {0}")]
    NotBiregular(String),
    #[error("topology is disconnected")]
    Disconnected,
    #[error("node set member {0} is not on side {1}")]
    WrongSide(NodeId, usize),
    #[error("subset S{0} is empty")]
    EmptySubset(usize),
    #[error("threshold ratio {0} must lie strictly between 0 and 1")]
    RatioOutOfRange(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot realize biregular graph: {0}")]
    Unrealizable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TopologyKind {
    Complete,
    CompleteBipartite,
    Butterfly { r: u32 },
    BipartiteOfButterfly { r: u32 },
    Biregular,
    Explicit,
}

/// Side sizes of a bipartite topology. Side A is `0..n_a`, side B follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub n_a: usize,
    pub n_b: usize,
}

impl Partition {
    pub fn side_a(&self) -> Range<NodeId> {
        0..self.n_a
    }

    pub fn side_b(&self) -> Range<NodeId> {
        self.n_a..self.n_a + self.n_b
    }

    /// 0 for side A, 1 for side B.
    pub fn side_of(&self, node: NodeId) -> usize {
        usize::from(node >= self.n_a)
    }

    pub fn side(&self, side: usize) -> Range<NodeId> {
        if side == 0 {
            self.side_a()
        } else {
            self.side_b()
        }
    }

    pub fn side_len(&self, side: usize) -> usize {
        if side == 0 {
            self.n_a
        } else {
            self.n_b
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    partition: Option<Partition>,
    /// Sorted `(neighbor, multiplicity)` lists.
    adj: Vec<Vec<(NodeId, u32)>>,
}

impl Topology {
    /// Builds a topology from an undirected edge list. Repeated edges
    /// accumulate multiplicity.
    pub fn from_edges(
        kind: TopologyKind,
        n: usize,
        partition: Option<Partition>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, TopologyError> {
        if let Some(p) = partition {
            assert_eq!(p.n_a + p.n_b, n, "partition sizes must sum to n");
        }
        let mut adj: Vec<Vec<(NodeId, u32)>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(TopologyError::NodeOutOfRange(u, v, n));
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            if let Some(p) = partition {
                if p.side_of(u) == p.side_of(v) {
                    return Err(TopologyError::NotCrossing(u, v));
                }
            }
            bump(&mut adj[u], v);
            bump(&mut adj[v], u);
        }
        Ok(Self { kind, partition, adj })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn partition(&self) -> Option<Partition> {
        self.partition
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn nodes(&self) -> Range<NodeId> {
        0..self.adj.len()
    }

    /// Neighbors with multiplicities, sorted by node index.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, u32)] {
        &self.adj[node]
    }

    pub fn neighbor_ids(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[node].iter().map(|&(v, _)| v)
    }

    pub fn multiplicity(&self, u: NodeId, v: NodeId) -> u32 {
        self.adj[u]
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.adj[u][i].1)
            .unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.multiplicity(u, v) > 0
    }

    /// Degree counting parallel edges.
    pub fn degree(&self, node: NodeId) -> usize {
        self.adj[node].iter().map(|&(_, m)| m as usize).sum()
    }

    /// Number of edges counting multiplicity.
    pub fn edge_count(&self) -> usize {
        self.nodes().map(|u| self.degree(u)).sum::<usize>() / 2
    }

    pub fn is_simple(&self) -> bool {
        self.adj.iter().all(|l| l.iter().all(|&(_, m)| m == 1))
    }

    /// Each undirected edge once (`u < v`), repeated by multiplicity.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in self.nodes() {
            for &(v, m) in &self.adj[u] {
                if u < v {
                    out.extend(std::iter::repeat_n((u, v), m as usize));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for v in self.neighbor_ids(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Per-side degrees `(d0, d1)` when the graph is partitioned and biregular.
    pub fn biregular_degrees(&self) -> Result<(usize, usize), TopologyError> {
        let p = self.partition.ok_or(TopologyError::NotBipartite)?;
        let side_degree = |side: usize| -> Result<usize, TopologyError> {
            let mut degrees = p.side(side).map(|u| self.degree(u));
            let first = degrees
                .next()
                .ok_or_else(|| TopologyError::NotBiregular(format!("side {side} is empty")))?;
            match degrees.find(|&d| d != first) {
                Some(other) => Err(TopologyError::NotBiregular(format!(
                    "side {side} has degrees {first} and {other}"
                ))),
                None => Ok(first),
            }
        };
        Ok((side_degree(0)?, side_degree(1)?))
    }

    /// Dense adjacency matrix (row-major) with multiplicities.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u32>> {
        let n = self.node_count();
        let mut m = vec![vec![0; n]; n];
        for u in self.nodes() {
            for &(v, c) in &self.adj[u] {
                m[u][v] = c;
            }
        }
        m
    }
}

fn bump(list: &mut Vec<(NodeId, u32)>, v: NodeId) {
    match list.binary_search_by_key(&v, |&(w, _)| w) {
        Ok(i) => list[i].1 += 1,
        Err(i) => list.insert(i, (v, 1)),
    }
}

pub fn build_complete(n: usize) -> Topology {
    assert!(n >= 1, "complete graph needs at least one node");
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Topology::from_edges(TopologyKind::Complete, n, None, edges).expect("complete graph is valid")
}

pub fn build_complete_bipartite(n_a: usize, n_b: usize) -> Topology {
    assert!(n_a >= 1 && n_b >= 1, "both sides need at least one node");
    let edges = (0..n_a).flat_map(|u| (n_a..n_a + n_b).map(move |v| (u, v)));
    Topology::from_edges(
        TopologyKind::CompleteBipartite,
        n_a + n_b,
        Some(Partition { n_a, n_b }),
        edges,
    )
    .expect("complete bipartite graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn handshake(t: &Topology) {
        let sum: usize = t.nodes().map(|u| t.degree(u)).sum();
        assert_eq!(sum, 2 * t.edge_count());
    }

    #[test]
    fn complete_graph_counts() {
        assert_eq!(build_complete(1).edge_count(), 0);
        assert_eq!(build_complete(4).edge_count(), 6);
        let k7 = build_complete(7);
        assert!(k7.nodes().all(|u| k7.degree(u) == 6));
        handshake(&k7);
        assert!(k7.partition().is_none());
    }

    #[test]
    fn complete_bipartite_counts() {
        assert_eq!(build_complete_bipartite(1, 1).edge_count(), 1);
        let k44 = build_complete_bipartite(4, 4);
        assert_eq!(k44.edge_count(), 16);
        assert_eq!(k44.biregular_degrees().unwrap(), (4, 4));
        assert_eq!(build_complete_bipartite(10, 10).edge_count(), 100);
        let k23 = build_complete_bipartite(2, 3);
        assert_eq!(k23.biregular_degrees().unwrap(), (3, 2));
        handshake(&k23);
    }

    #[test]
    fn rejects_bad_edges() {
        let p = Some(Partition { n_a: 2, n_b: 2 });
        assert_eq!(
            Topology::from_edges(TopologyKind::Explicit, 4, p, [(0, 1)]),
            Err(TopologyError::NotCrossing(0, 1))
        );
        assert_eq!(
            Topology::from_edges(TopologyKind::Explicit, 4, None, [(2, 2)]),
            Err(TopologyError::SelfLoop(2))
        );
        assert!(matches!(
            Topology::from_edges(TopologyKind::Explicit, 4, None, [(0, 9)]),
            Err(TopologyError::NodeOutOfRange(..))
        ));
    }

    #[test]
    fn adjacency_is_symmetric() {
        let t = build_complete_bipartite(3, 2);
        let m = t.adjacency_matrix();
        for (u, row) in m.iter().enumerate() {
            assert_eq!(row[u], 0);
            for (v, &c) in row.iter().enumerate() {
                assert_eq!(c, m[v][u]);
            }
        }
    }

    #[test]
    fn connectivity() {
        assert!(build_complete_bipartite(3, 3).is_connected());
        let split = Topology::from_edges(
            TopologyKind::Explicit,
            4,
            Some(Partition { n_a: 2, n_b: 2 }),
            [(0, 2), (1, 3)],
        )
        .unwrap();
        assert!(!split.is_connected());
    }
}
