use serde::{Deserialize, Serialize};

use super::{NodeId, Partition, Topology, TopologyError, TopologyKind};

/// A butterfly node `v_{layer, column}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ButterflyNode {
    pub layer: u32,
    pub column: usize,
}

impl ButterflyNode {
    pub fn index(self, columns: usize) -> NodeId {
        self.layer as usize * columns + self.column
    }
}

/// Wrapped r-butterfly: `r` layers of `s = 2^r` columns. Node `v_{i,j}` has a
/// straight edge to `v_{(i+1) mod r, j}` and a cross edge to
/// `v_{(i+1) mod r, j xor 2^((i+1) mod r)}`, so every node has degree 4.
/// For `r = 2` the straight edges of layers 0→1 and 1→0 coincide and are kept
/// as a double edge.
pub fn build_butterfly(r: u32) -> Result<Topology, TopologyError> {
    if r < 2 || !r.is_multiple_of(2) || r > 20 {
        return Err(TopologyError::InvalidButterflyOrder(r));
    }
    let s = 1usize << r;
    let mut edges = Vec::with_capacity(2 * r as usize * s);
    for i in 0..r {
        let next = (i + 1) % r;
        for j in 0..s {
            let here = ButterflyNode { layer: i, column: j }.index(s);
            let straight = ButterflyNode { layer: next, column: j }.index(s);
            let cross = ButterflyNode {
                layer: next,
                column: j ^ (1 << next),
            }
            .index(s);
            edges.push((here, straight));
            edges.push((here, cross));
        }
    }
    Topology::from_edges(TopologyKind::Butterfly { r }, r as usize * s, None, edges)
}

/// Bipartite simulation of a butterfly together with its node mapping.
#[derive(Debug, Clone)]
pub struct BipartiteSimulation {
    pub topology: Topology,
    /// `simulated[v]` lists the butterfly nodes hosted by bipartite node `v`.
    pub simulated: Vec<Vec<ButterflyNode>>,
}

/// Collapses even layers of an r-butterfly onto side 0 and odd layers onto
/// side 1: column `j` of every even layer is hosted by `v_0(j)`, column `j` of
/// every odd layer by `v_1(j)`. Each butterfly edge joins adjacent layers, so
/// with `r` even it becomes a cross-side edge; parallel edges are kept, making
/// both sides `2r`-regular.
pub fn butterfly_to_bipartite(butterfly: &Topology) -> Result<BipartiteSimulation, TopologyError> {
    let TopologyKind::Butterfly { r } = butterfly.kind() else {
        return Err(TopologyError::NotButterfly);
    };
    let s = 1usize << r;
    if butterfly.node_count() != r as usize * s || r % 2 != 0 {
        return Err(TopologyError::NotButterfly);
    }
    let host = |node: NodeId| -> NodeId {
        let layer = node / s;
        let column = node % s;
        if layer.is_multiple_of(2) {
            column
        } else {
            s + column
        }
    };
    let mut edges = Vec::with_capacity(butterfly.edge_count());
    for (u, v) in butterfly.edges() {
        let (hu, hv) = (host(u), host(v));
        if (hu < s) == (hv < s) {
            return Err(TopologyError::NotButterfly);
        }
        edges.push((hu, hv));
    }
    let topology = Topology::from_edges(
        TopologyKind::BipartiteOfButterfly { r },
        2 * s,
        Some(Partition { n_a: s, n_b: s }),
        edges,
    )?;
    let mut simulated = vec![Vec::new(); 2 * s];
    for layer in 0..r {
        for column in 0..s {
            let node = ButterflyNode { layer, column };
            simulated[host(node.index(s))].push(node);
        }
    }
    Ok(BipartiteSimulation { topology, simulated })
}
