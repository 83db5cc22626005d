use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{NodeId, Topology, TopologyError};

pub type Ratio = num_rational::Ratio<u64>;

/// Non-poor correct node sets of a biregular bipartite graph.
///
/// `p[i]`, `z[i]` and the faulty set `T_i` partition side `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NpcResult {
    pub p: [Vec<NodeId>; 2],
    pub z: [Vec<NodeId>; 2],
    pub beta: [Ratio; 2],
}

impl NpcResult {
    pub fn npc_count(&self) -> usize {
        self.p[0].len() + self.p[1].len()
    }
}

/// Iteratively writes off every node whose neighborhood (counted with
/// multiplicity) holds at least `beta_i * d_i` faulty or written-off nodes of
/// the opposite side, until nothing changes.
///
/// The elimination is monotone, so the fixpoint does not depend on the order
/// in which nodes are examined. Threshold comparisons are exact:
/// `count * denom >= numer * d`.
pub fn npc_sets(
    g: &Topology,
    beta0: Ratio,
    beta1: Ratio,
    t0: &BTreeSet<NodeId>,
    t1: &BTreeSet<NodeId>,
) -> Result<NpcResult, TopologyError> {
    let partition = g.partition().ok_or(TopologyError::NotBipartite)?;
    let (d0, d1) = g.biregular_degrees()?;
    for beta in [beta0, beta1] {
        if *beta.numer() == 0 || beta.numer() >= beta.denom() {
            return Err(TopologyError::RatioOutOfRange(beta.to_string()));
        }
    }
    for (side, set) in [t0, t1].into_iter().enumerate() {
        if let Some(&bad) = set
            .iter()
            .find(|&&v| v >= g.node_count() || partition.side_of(v) != side)
        {
            return Err(TopologyError::WrongSide(bad, side));
        }
    }

    let degree = [d0 as u64, d1 as u64];
    let beta = [beta0, beta1];
    let over_threshold =
        |side: usize, count: u64| -> bool { count * beta[side].denom() >= beta[side].numer() * degree[side] };

    let n = g.node_count();
    let mut bad = vec![false; n];
    let mut hits = vec![0u64; n];
    let mut queue: VecDeque<NodeId> = t0.iter().chain(t1).copied().collect();
    for &v in &queue {
        bad[v] = true;
    }
    let mut eliminated = vec![false; n];
    while let Some(u) = queue.pop_front() {
        for &(v, mult) in g.neighbors(u) {
            hits[v] += u64::from(mult);
            if !bad[v] && over_threshold(partition.side_of(v), hits[v]) {
                bad[v] = true;
                eliminated[v] = true;
                queue.push_back(v);
            }
        }
    }

    let collect = |side: usize, pick: &dyn Fn(NodeId) -> bool| -> Vec<NodeId> {
        partition.side(side).filter(|&v| pick(v)).collect()
    };
    Ok(NpcResult {
        p: [collect(0, &|v| !bad[v]), collect(1, &|v| !bad[v])],
        z: [collect(0, &|v| eliminated[v]), collect(1, &|v| eliminated[v])],
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_butterfly, build_complete_bipartite, butterfly_to_bipartite};

    /// Literal synchronous rounds: recompute both candidate sets from the
    /// previous round's eliminations until no new node is added.
    fn naive_npc(g: &Topology, beta: [Ratio; 2], t: [&BTreeSet<NodeId>; 2]) -> [BTreeSet<NodeId>; 2] {
        let p = g.partition().unwrap();
        let (d0, d1) = g.biregular_degrees().unwrap();
        let d = [d0 as u64, d1 as u64];
        let mut z: [BTreeSet<NodeId>; 2] = Default::default();
        loop {
            let mut fresh: [BTreeSet<NodeId>; 2] = Default::default();
            for side in 0..2 {
                let other = 1 - side;
                for j in p.side(side) {
                    let mut count = 0u64;
                    for k in p.side(other) {
                        if t[other].contains(&k) || z[other].contains(&k) {
                            count += u64::from(g.multiplicity(j, k));
                        }
                    }
                    if count * beta[side].denom() >= beta[side].numer() * d[side] && !z[side].contains(&j) {
                        fresh[side].insert(j);
                    }
                }
            }
            if fresh[0].is_empty() && fresh[1].is_empty() {
                break;
            }
            for side in 0..2 {
                z[side].extend(fresh[side].iter().copied());
            }
        }
        let mut out: [BTreeSet<NodeId>; 2] = Default::default();
        for side in 0..2 {
            out[side] = p
                .side(side)
                .filter(|v| !z[side].contains(v) && !t[side].contains(v))
                .collect();
        }
        out
    }

    fn r(a: u64, b: u64) -> Ratio {
        Ratio::new(a, b)
    }

    #[test]
    fn empty_faulty_sets_keep_everything() {
        let g = build_complete_bipartite(4, 4);
        let res = npc_sets(&g, r(3, 4), r(3, 4), &BTreeSet::new(), &BTreeSet::new()).unwrap();
        assert_eq!(res.p[0], vec![0, 1, 2, 3]);
        assert_eq!(res.p[1], vec![4, 5, 6, 7]);
        assert!(res.z[0].is_empty() && res.z[1].is_empty());
    }

    #[test]
    fn single_fault_on_k44() {
        let g = build_complete_bipartite(4, 4);
        let t0 = BTreeSet::from([2]);
        let res = npc_sets(&g, r(3, 4), r(3, 4), &t0, &BTreeSet::new()).unwrap();
        assert!(res.z[0].is_empty() && res.z[1].is_empty());
        assert_eq!(res.p[0], vec![0, 1, 3]);
        assert_eq!(res.p[1], vec![4, 5, 6, 7]);
    }

    #[test]
    fn cascade_eliminates_both_sides() {
        // K_{2,2}: one faulty node on side 0 is half of every side-1 neighborhood.
        let g = build_complete_bipartite(2, 2);
        let res = npc_sets(&g, r(1, 2), r(1, 2), &BTreeSet::from([0]), &BTreeSet::new()).unwrap();
        assert_eq!(res.z[1], vec![2, 3]);
        assert_eq!(res.z[0], vec![1]);
        assert_eq!(res.npc_count(), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = build_complete_bipartite(2, 2);
        let empty = BTreeSet::new();
        assert!(matches!(
            npc_sets(&g, r(0, 1), r(1, 2), &empty, &empty),
            Err(TopologyError::RatioOutOfRange(_))
        ));
        assert!(matches!(
            npc_sets(&g, r(1, 2), r(1, 2), &BTreeSet::from([3]), &empty),
            Err(TopologyError::WrongSide(3, 0))
        ));
        let k4 = crate::topology::build_complete(4);
        assert_eq!(
            npc_sets(&k4, r(1, 2), r(1, 2), &empty, &empty).unwrap_err(),
            TopologyError::NotBipartite
        );
    }

    #[test]
    fn matches_naive_on_butterfly_r2() {
        let g = butterfly_to_bipartite(&build_butterfly(2).unwrap()).unwrap().topology;
        for a in 0..4 {
            for b in 4..8 {
                let t0 = BTreeSet::from([a]);
                let t1 = BTreeSet::from([b]);
                for beta in [r(1, 4), r(1, 2), r(3, 4)] {
                    let fast = npc_sets(&g, beta, beta, &t0, &t1).unwrap();
                    let slow = naive_npc(&g, [beta, beta], [&t0, &t1]);
                    assert_eq!(fast.p[0], slow[0].iter().copied().collect::<Vec<_>>());
                    assert_eq!(fast.p[1], slow[1].iter().copied().collect::<Vec<_>>());
                }
            }
        }
    }
}
