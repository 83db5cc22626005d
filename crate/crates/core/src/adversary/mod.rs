//! Static Byzantine adversary: a fixed corruption set and a strategy that
//! decides, per phase, what every corrupted node sends to each neighbor.

mod script;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::broadcast::{GeneralId, Message, RoundClock};
use crate::topology::{NodeId, Partition, Topology};

pub use script::{enumerate_scripts, sends_in, ExplicitScript, ScriptSpace, SlotKey, DEFAULT_SCRIPT_CAP};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("script overrides messages of correct node {0}")]
    NotCorrupted(NodeId),
    #[error("corruption set puts {count} nodes on side {side}, budget is {budget}")]
    OverBudget { side: char, count: usize, budget: usize },
    #[error("node {0} is not in the topology")]
    UnknownNode(NodeId),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("enumeration needs 2^{bits} scripts, above the cap of {cap}")]
    CapExceeded { bits: usize, cap: u128 },
    #[error("proposed message from {sender} altered although the sender is correct")]
    AlteredCorrectMessage { sender: NodeId },
}

/// The nodes under adversary control, fixed for a whole execution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorruptionSet {
    nodes: BTreeSet<NodeId>,
}

impl CorruptionSet {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        Self {
            nodes: nodes.into_iter().collect(),
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn on_side(&self, partition: Partition, side: usize) -> Vec<NodeId> {
        self.iter()
            .filter(|&v| v < partition.n_a + partition.n_b && partition.side_of(v) == side)
            .collect()
    }

    /// Checks node range and the per-side budget (`budget[0]` alone on a
    /// topology without sides).
    pub fn validate(&self, topology: &Topology, budget: [usize; 2]) -> Result<(), AdversaryError> {
        if let Some(&bad) = self.nodes.iter().find(|&&v| v >= topology.node_count()) {
            return Err(AdversaryError::UnknownNode(bad));
        }
        match topology.partition() {
            Some(p) => {
                for (side, name) in [(0, 'A'), (1, 'B')] {
                    let count = self.on_side(p, side).len();
                    if count > budget[side] {
                        return Err(AdversaryError::OverBudget {
                            side: name,
                            count,
                            budget: budget[side],
                        });
                    }
                }
            }
            None => {
                if self.len() > budget[0] {
                    return Err(AdversaryError::OverBudget {
                        side: '-',
                        count: self.len(),
                        budget: budget[0],
                    });
                }
            }
        }
        Ok(())
    }

    /// Every corruption set with exactly `f_a` nodes on side A and `f_b` on
    /// side B, in lexicographic order.
    pub fn all_exact(partition: Partition, f_a: usize, f_b: usize) -> Vec<Self> {
        let a = subsets(partition.side_a().collect(), f_a);
        let b = subsets(partition.side_b().collect(), f_b);
        let mut out = Vec::with_capacity(a.len() * b.len());
        for sa in &a {
            for sb in &b {
                out.push(Self::new(sa.iter().chain(sb).copied()));
            }
        }
        out
    }

    /// Every corruption set of a graph without sides with exactly `f` nodes.
    pub fn all_exact_single(n: usize, f: usize) -> Vec<Self> {
        subsets((0..n).collect(), f).into_iter().map(Self::new).collect()
    }

    /// Every corruption set within the budget (sizes `0..=f` per side).
    pub fn all_within(partition: Partition, f_a: usize, f_b: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for ka in 0..=f_a {
            for kb in 0..=f_b {
                out.extend(Self::all_exact(partition, ka, kb));
            }
        }
        out
    }

    /// Uniformly random set with exactly `f_a` + `f_b` nodes.
    pub fn random<R: Rng + ?Sized>(partition: Partition, f_a: usize, f_b: usize, rng: &mut R) -> Self {
        use rand::seq::index::sample;
        let a = sample(rng, partition.n_a, f_a).into_iter();
        let b: Vec<_> = sample(rng, partition.n_b, f_b)
            .into_iter()
            .map(|i| partition.n_a + i)
            .collect();
        Self::new(a.chain(b))
    }
}

fn subsets(items: Vec<NodeId>, k: usize) -> Vec<Vec<NodeId>> {
    fn go(items: &[NodeId], k: usize, start: usize, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= items.len() {
        go(&items, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// What corrupted nodes send.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// Never send anything.
    Silent,
    /// Follow the protocol as a correct node whose input is `value`.
    Consistent {
        value: bool,
    },
    /// Send 1 on every General to the listed receivers and 0 to everyone else.
    Split {
        ones_to: BTreeSet<NodeId>,
    },
    /// Independent fair bits per slot from a ChaCha8 stream seeded by `seed`.
    SeededRandom {
        seed: u64,
    },
    Explicit {
        script: ExplicitScript,
    },
}

impl Strategy {
    /// Input a corrupted side-A node is given when it runs the protocol as a
    /// shadow, if the strategy prescribes one.
    pub fn shadow_input(&self) -> Option<bool> {
        match self {
            Strategy::Consistent { value } => Some(*value),
            _ => None,
        }
    }
}

/// A corruption set together with its strategy. Rounds at or after `horizon`
/// are silent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryScript {
    pub corruption: CorruptionSet,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u32>,
}

impl AdversaryScript {
    pub fn new(corruption: CorruptionSet, strategy: Strategy) -> Self {
        Self {
            corruption,
            strategy,
            horizon: None,
        }
    }

    pub fn silent() -> Self {
        Self::new(CorruptionSet::default(), Strategy::Silent)
    }

    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn validate(&self) -> Result<(), AdversaryError> {
        if let Strategy::Explicit { script } = &self.strategy {
            script.validate(&self.corruption)?;
        }
        Ok(())
    }

    /// Replaces the corrupted senders' proposals for one phase.
    ///
    /// `proposed` holds every message the senders of this phase would send if
    /// they were correct (corrupted nodes' entries come from their shadow
    /// runs); the strategy may read all of it. Correct senders' messages pass
    /// through unchanged. Every corrupted sender of the phase emits one
    /// message per neighbor and General, value 0 standing for absence; the
    /// result is sorted by sender, receiver, General.
    pub fn apply(
        &self,
        clock: RoundClock,
        topology: &Topology,
        generals: usize,
        proposed: &[Message],
    ) -> Result<Vec<Message>, AdversaryError> {
        self.validate()?;
        let active = self.horizon.is_none_or(|h| clock.round < h);
        let mut rng = match (&self.strategy, active) {
            (Strategy::SeededRandom { seed }, true) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(u64::from(clock.round) * 2 + u64::from(clock.phase.number() - 1));
                Some(rng)
            }
            _ => None,
        };
        let mut out: Vec<Message> = proposed
            .iter()
            .filter(|m| !self.corruption.contains(m.sender))
            .copied()
            .collect();
        for sender in self.corruption.iter() {
            if !sends_in(topology, sender, clock.phase) {
                continue;
            }
            for receiver in topology.neighbor_ids(sender) {
                for g in 0..generals {
                    let general = GeneralId(g as u32);
                    let value = if !active {
                        false
                    } else {
                        match &self.strategy {
                            Strategy::Silent => false,
                            Strategy::Consistent { .. } => proposed.iter().any(|m| {
                                m.sender == sender && m.receiver == receiver && m.general == general && m.value
                            }),
                            Strategy::Split { ones_to } => ones_to.contains(&receiver),
                            Strategy::SeededRandom { .. } => rng.as_mut().expect("seeded").gen_bool(0.5),
                            Strategy::Explicit { script } => script.get(clock, sender, receiver, general),
                        }
                    };
                    out.push(Message {
                        round: clock.round,
                        phase: clock.phase,
                        sender,
                        receiver,
                        general,
                        value,
                    });
                }
            }
        }
        out.sort_by_key(|m| (m.sender, m.receiver, m.general));
        for m in proposed.iter().filter(|m| !self.corruption.contains(m.sender)) {
            if !out.contains(m) {
                return Err(AdversaryError::AlteredCorrectMessage { sender: m.sender });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast::Phase;
    use crate::topology::build_complete_bipartite;

    fn k44() -> Topology {
        build_complete_bipartite(4, 4)
    }

    fn correct_msg(sender: NodeId, receiver: NodeId) -> Message {
        Message {
            round: 0,
            phase: Phase::AToB,
            sender,
            receiver,
            general: GeneralId(0),
            value: true,
        }
    }

    #[test]
    fn silent_sends_zero_everywhere() {
        let script = AdversaryScript::new(CorruptionSet::new([0]), Strategy::Silent);
        let proposed: Vec<_> = (4..8).map(|r| correct_msg(1, r)).collect();
        let out = script.apply(RoundClock::START, &k44(), 1, &proposed).unwrap();
        let faulty: Vec<_> = out.iter().filter(|m| m.sender == 0).collect();
        assert_eq!(faulty.len(), 4);
        assert!(faulty.iter().all(|m| !m.value));
        assert!(proposed.iter().all(|m| out.contains(m)));
    }

    #[test]
    fn split_delivers_exactly_to_chosen_receivers() {
        let script = AdversaryScript::new(
            CorruptionSet::new([0]),
            Strategy::Split {
                ones_to: BTreeSet::from([4, 5]),
            },
        );
        let out = script.apply(RoundClock::START, &k44(), 1, &[]).unwrap();
        let ones: Vec<_> = out.iter().filter(|m| m.value).map(|m| m.receiver).collect();
        assert_eq!(ones, vec![4, 5]);
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn consistent_copies_shadow_plan() {
        let script = AdversaryScript::new(CorruptionSet::new([0]), Strategy::Consistent { value: true });
        let proposed: Vec<_> = (4..8).map(|r| correct_msg(0, r)).collect();
        let out = script.apply(RoundClock::START, &k44(), 1, &proposed).unwrap();
        assert_eq!(out, proposed);
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let script = |seed| AdversaryScript::new(CorruptionSet::new([0, 4]), Strategy::SeededRandom { seed });
        let run = |seed| {
            let mut all = Vec::new();
            for round in 0..8 {
                for phase in [Phase::AToB, Phase::BToA] {
                    all.extend(
                        script(seed)
                            .apply(RoundClock::new(round, phase), &k44(), 2, &[])
                            .unwrap(),
                    );
                }
            }
            all
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn horizon_silences_later_rounds() {
        let script = AdversaryScript::new(
            CorruptionSet::new([0]),
            Strategy::Split {
                ones_to: BTreeSet::from([4]),
            },
        )
        .with_horizon(1);
        let out = script.apply(RoundClock::new(1, Phase::AToB), &k44(), 1, &[]).unwrap();
        assert!(out.iter().all(|m| !m.value));
    }

    #[test]
    fn faulty_side_b_is_quiet_in_phase_one() {
        let script = AdversaryScript::new(
            CorruptionSet::new([4]),
            Strategy::Split {
                ones_to: BTreeSet::from([0]),
            },
        );
        assert!(script.apply(RoundClock::START, &k44(), 1, &[]).unwrap().is_empty());
        assert_eq!(
            script
                .apply(RoundClock::new(0, Phase::BToA), &k44(), 1, &[])
                .unwrap()
                .len(),
            4
        );
    }

    #[test]
    fn explicit_script_must_stay_on_corrupted_senders() {
        let mut s = ExplicitScript::new();
        s.set(RoundClock::START, 1, 4, GeneralId(0), true);
        let script = AdversaryScript::new(CorruptionSet::new([0]), Strategy::Explicit { script: s });
        assert_eq!(
            script.apply(RoundClock::START, &k44(), 1, &[]),
            Err(AdversaryError::NotCorrupted(1))
        );
    }

    #[test]
    fn corruption_budget() {
        let g = k44();
        assert!(CorruptionSet::new([0, 4]).validate(&g, [1, 1]).is_ok());
        assert!(matches!(
            CorruptionSet::new([0, 1]).validate(&g, [1, 1]),
            Err(AdversaryError::OverBudget {
                side: 'A',
                count: 2,
                budget: 1
            })
        ));
        assert_eq!(
            CorruptionSet::new([9]).validate(&g, [1, 1]),
            Err(AdversaryError::UnknownNode(9))
        );
    }

    #[test]
    fn corruption_enumeration_counts() {
        let p = Partition { n_a: 4, n_b: 4 };
        assert_eq!(CorruptionSet::all_exact(p, 1, 1).len(), 16);
        assert_eq!(CorruptionSet::all_within(p, 1, 1).len(), 25);
        assert_eq!(CorruptionSet::all_exact_single(4, 1).len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = CorruptionSet::random(Partition { n_a: 7, n_b: 7 }, 2, 2, &mut rng);
        assert_eq!(t.on_side(Partition { n_a: 7, n_b: 7 }, 0).len(), 2);
        assert_eq!(t.on_side(Partition { n_a: 7, n_b: 7 }, 1).len(), 2);
    }
}
