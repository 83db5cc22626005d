//! Lockstep two-phase execution of the protocols under a static adversary,
//! trace recording and replay, and the exhaustive explorer.

mod explore;
mod machine;
mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{sends_in, AdversaryError, AdversaryScript};
use crate::agreement::{AgreementConfig, LeverNode, LeverParams, SideARule};
use crate::broadcast::{
    AcceptEvent, BiNode, BroadcastConfig, ConfigError, GeneralId, KnNode, Message, Outgoing, Phase, ProtocolViolation,
    RoundClock, Thresholds,
};
use crate::topology::{build_complete, build_complete_bipartite, NodeId, Partition, Topology};

pub use explore::{explore, Counterexample, ExploreOutcome, ExploreSpec, Violation};
pub use machine::Machine;
pub use trace::{ExecutionTrace, Metrics, NodeSnapshot, Record, RoundSnapshot, TraceHeader, TRACE_VERSION};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error("at round {} phase {}: {source}", clock.round, clock.phase.number())]
    Violation {
        clock: RoundClock,
        source: ProtocolViolation,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("trace version {found} cannot be replayed by version {expected}")]
    Version { found: u32, expected: u32 },
    #[error("malformed trace, line {line}: {msg}")]
    Trace { line: usize, msg: String },
}

/// Graph families the protocols run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TopologySpec {
    Complete { n: usize },
    CompleteBipartite { n_a: usize, n_b: usize },
}

impl TopologySpec {
    pub fn build(&self) -> Topology {
        match *self {
            TopologySpec::Complete { n } => build_complete(n),
            TopologySpec::CompleteBipartite { n_a, n_b } => build_complete_bipartite(n_a, n_b),
        }
    }

    pub fn node_count(&self) -> usize {
        match *self {
            TopologySpec::Complete { n } => n,
            TopologySpec::CompleteBipartite { n_a, n_b } => n_a + n_b,
        }
    }

    pub fn partition(&self) -> Option<Partition> {
        match *self {
            TopologySpec::Complete { .. } => None,
            TopologySpec::CompleteBipartite { n_a, n_b } => Some(Partition { n_a, n_b }),
        }
    }

    /// Phases of one round: both on a bipartite graph, phase one only on `K_n`.
    pub fn phases(&self) -> &'static [Phase] {
        match self {
            TopologySpec::Complete { .. } => &[Phase::AToB],
            TopologySpec::CompleteBipartite { .. } => &[Phase::AToB, Phase::BToA],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProtocolSpec {
    /// Relay broadcast on `K_n` with `generals` parallel instances.
    BroadcastKn { f: usize, generals: usize },
    /// Two-phase broadcast on `K_{n_A,n_B}`.
    BiBroadcast { f_a: usize, f_b: usize, generals: usize },
    /// Agreement through the lever; one instance per side-B node.
    BaLever {
        f_a: usize,
        f_b: usize,
        g0: GeneralId,
        #[serde(default)]
        side_a_rule: SideARule,
    },
}

impl ProtocolSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolSpec::BroadcastKn { .. } => "broadcast-kn",
            ProtocolSpec::BiBroadcast { .. } => "bi-broadcast",
            ProtocolSpec::BaLever { .. } => "ba-lever",
        }
    }

    /// Per-side corruption budget (`[f, 0]` on `K_n`).
    pub fn budget(&self) -> [usize; 2] {
        match *self {
            ProtocolSpec::BroadcastKn { f, .. } => [f, 0],
            ProtocolSpec::BiBroadcast { f_a, f_b, .. } | ProtocolSpec::BaLever { f_a, f_b, .. } => [f_a, f_b],
        }
    }

    pub fn is_agreement(&self) -> bool {
        matches!(self, ProtocolSpec::BaLever { .. })
    }
}

/// One protocol input: `node` starts `general` with `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InitValue {
    pub node: NodeId,
    pub general: GeneralId,
    pub value: bool,
}

impl InitValue {
    pub fn uniform(nodes: impl IntoIterator<Item = NodeId>, general: GeneralId, value: bool) -> Vec<Self> {
        nodes.into_iter().map(|node| Self { node, general, value }).collect()
    }
}

/// Everything that determines an execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub topology: TopologySpec,
    pub protocol: ProtocolSpec,
    pub inits: Vec<InitValue>,
    pub adversary: AdversaryScript,
    pub max_rounds: u32,
    /// Shift of every accept threshold; nonzero only for mutation checks.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub accept_offset: i64,
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}

impl RunSpec {
    pub fn new(
        topology: TopologySpec,
        protocol: ProtocolSpec,
        inits: Vec<InitValue>,
        adversary: AdversaryScript,
    ) -> Self {
        let mut spec = Self {
            topology,
            protocol,
            inits,
            adversary,
            max_rounds: 0,
            accept_offset: 0,
        };
        spec.max_rounds = spec.default_rounds();
        spec
    }

    pub fn with_rounds(mut self, rounds: u32) -> Self {
        self.max_rounds = rounds;
        self
    }

    /// Number of parallel broadcast instances.
    pub fn generals(&self) -> usize {
        match (self.protocol, self.topology) {
            (ProtocolSpec::BroadcastKn { generals, .. }, _) | (ProtocolSpec::BiBroadcast { generals, .. }, _) => {
                generals
            }
            (ProtocolSpec::BaLever { .. }, TopologySpec::CompleteBipartite { n_b, .. }) => n_b,
            (ProtocolSpec::BaLever { .. }, TopologySpec::Complete { .. }) => 0,
        }
    }

    pub fn agreement_config(&self) -> Option<AgreementConfig> {
        match (self.protocol, self.topology) {
            (ProtocolSpec::BaLever { f_a, f_b, .. }, TopologySpec::CompleteBipartite { n_a, n_b }) => {
                Some(AgreementConfig::lever(n_a, n_b, f_a, f_b))
            }
            _ => None,
        }
    }

    /// `k_f + 2` for agreement; for broadcast, enough rounds for every
    /// correct relay to happen after the adversary falls silent.
    pub fn default_rounds(&self) -> u32 {
        match self.agreement_config() {
            Some(cfg) => cfg.k_f() + 2,
            None => {
                let f = self.protocol.budget().iter().sum::<usize>() as u32;
                let horizon = self.adversary.horizon.unwrap_or(0);
                (f + 3).max(horizon + (self.topology.node_count() * self.generals().max(1)) as u32 + 2)
            }
        }
    }

    pub fn lever_params(&self) -> Option<LeverParams> {
        let cfg = self.agreement_config()?;
        let ProtocolSpec::BaLever { g0, side_a_rule, .. } = self.protocol else {
            return None;
        };
        let mut params = LeverParams::new(&cfg, g0);
        params.side_a_rule = side_a_rule;
        params.accept_offset = self.accept_offset;
        Some(params)
    }

    /// Checks side bounds, topology/protocol fit, inputs, corruption budget
    /// and the script, in that order.
    pub fn validate(&self) -> Result<(), SimError> {
        let generals = self.generals();
        match (self.protocol, self.topology) {
            (ProtocolSpec::BroadcastKn { f, .. }, TopologySpec::Complete { n }) => {
                BroadcastConfig::Complete { n, f }.validate()?;
            }
            (ProtocolSpec::BiBroadcast { f_a, f_b, .. }, TopologySpec::CompleteBipartite { n_a, n_b }) => {
                BroadcastConfig::Bipartite { n_a, n_b, f_a, f_b }.validate()?;
            }
            (ProtocolSpec::BaLever { g0, .. }, TopologySpec::CompleteBipartite { n_b, .. }) => {
                self.agreement_config().expect("bipartite lever").validate()?;
                if g0.index() >= n_b {
                    return Err(SimError::Invalid(format!(
                        "nominal General {} is not a side-B index below {n_b}",
                        g0.0
                    )));
                }
                let k_f = self.agreement_config().expect("bipartite lever").k_f();
                if self.max_rounds <= k_f {
                    return Err(SimError::Invalid(format!(
                        "agreement needs rounds 0..={k_f}, got max_rounds = {}",
                        self.max_rounds
                    )));
                }
            }
            (p, t) => {
                return Err(SimError::Invalid(format!("protocol {} cannot run on {t:?}", p.name())));
            }
        }
        if generals == 0 {
            return Err(SimError::Invalid("at least one General is required".into()));
        }
        let n = self.topology.node_count();
        let mut seen = BTreeMap::new();
        for init in &self.inits {
            if init.node >= n {
                return Err(SimError::Invalid(format!("input for unknown node {}", init.node)));
            }
            if init.general.index() >= generals {
                return Err(SimError::Invalid(format!(
                    "input for unknown General {}",
                    init.general.0
                )));
            }
            if let Some(p) = self.topology.partition() {
                if p.side_of(init.node) != 0 {
                    return Err(SimError::Invalid(format!(
                        "node {} is on side B and takes no input",
                        init.node
                    )));
                }
            }
            if let ProtocolSpec::BaLever { g0, .. } = self.protocol {
                if init.general != g0 {
                    return Err(SimError::Invalid(format!(
                        "lever inputs go to the nominal General {}",
                        g0.0
                    )));
                }
            }
            if seen.insert((init.node, init.general), ()).is_some() {
                return Err(SimError::Invalid(format!(
                    "node {} has two inputs for General {}",
                    init.node, init.general.0
                )));
            }
        }
        self.adversary
            .corruption
            .validate(&self.topology.build(), self.protocol.budget())?;
        self.adversary.validate()?;
        Ok(())
    }

    /// A fresh node running the protocol correctly, before any input.
    pub fn machine(&self, id: NodeId) -> Machine {
        let offset = self.accept_offset;
        match (self.protocol, self.topology) {
            (ProtocolSpec::BroadcastKn { f, generals }, TopologySpec::Complete { n }) => Machine::Kn(KnNode::new(
                id,
                n,
                Thresholds::new(n, f).with_accept_offset(offset),
                generals,
            )),
            (ProtocolSpec::BiBroadcast { f_a, f_b, generals }, TopologySpec::CompleteBipartite { n_a, n_b }) => {
                let cfg = BroadcastConfig::Bipartite { n_a, n_b, f_a, f_b };
                let p = Partition { n_a, n_b };
                let t = cfg.thresholds()[p.side_of(id)].with_accept_offset(offset);
                Machine::Bi(BiNode::new(id, p, t, generals))
            }
            _ => Machine::Lever(LeverNode::new(id, self.lever_params().expect("validated lever spec"))),
        }
    }

    /// Generals a node may take input for; empty for side-B nodes.
    fn input_generals(&self, id: NodeId) -> Vec<GeneralId> {
        if self.topology.partition().is_some_and(|p| p.side_of(id) != 0) {
            return Vec::new();
        }
        match self.protocol {
            ProtocolSpec::BaLever { g0, .. } => vec![g0],
            _ => (0..self.generals()).map(|g| GeneralId(g as u32)).collect(),
        }
    }

    /// Correct executions a node could be running: one per assignment of
    /// inputs to the Generals it may start. A corrupted node has deviated
    /// once its sends fit none of them.
    pub fn candidates(&self, id: NodeId) -> Result<Vec<Machine>, ProtocolViolation> {
        let gens = self.input_generals(id);
        let mut out = Vec::with_capacity(1 << gens.len());
        for mask in 0u32..(1 << gens.len()) {
            let mut m = self.machine(id);
            for (j, &g) in gens.iter().enumerate() {
                m.init(g, mask >> j & 1 == 1)?;
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Node as the adversary sees it before corrupting it: its configured
    /// inputs, or the strategy's prescribed input on every startable General.
    fn proposal_machine(&self, id: NodeId) -> Result<Machine, ProtocolViolation> {
        let mut m = self.machine(id);
        match self.adversary.strategy.shadow_input() {
            Some(v) if self.adversary.corruption.contains(id) => {
                for g in self.input_generals(id) {
                    m.init(g, v)?;
                }
            }
            _ => {
                for init in self.inits.iter().filter(|i| i.node == id) {
                    m.init(init.general, init.value)?;
                }
            }
        }
        Ok(m)
    }
}

/// Per-receiver sends implied by a list of planned broadcasts.
pub(crate) fn expand(topology: &Topology, sender: NodeId, clock: RoundClock, outs: &[Outgoing]) -> Vec<Message> {
    let mut msgs = Vec::new();
    for receiver in topology.neighbor_ids(sender) {
        for o in outs {
            msgs.push(Message {
                round: clock.round,
                phase: clock.phase,
                sender,
                receiver,
                general: o.general,
                value: o.value,
            });
        }
    }
    msgs
}

/// Whether the values `sender` actually sent equal `plan`, reading every
/// missing entry as 0.
pub(crate) fn matches_plan(actual: &[Message], plan: &[Message]) -> bool {
    let mut want: BTreeMap<(NodeId, GeneralId), bool> = BTreeMap::new();
    for m in plan {
        *want.entry((m.receiver, m.general)).or_default() |= m.value;
    }
    let mut got: BTreeMap<(NodeId, GeneralId), bool> = BTreeMap::new();
    for m in actual {
        *got.entry((m.receiver, m.general)).or_default() |= m.value;
    }
    want.retain(|_, v| *v);
    got.retain(|_, v| *v);
    want == got
}

fn check_discipline(topology: &Topology, clock: RoundClock, msgs: &[Message]) -> Result<(), SimError> {
    for m in msgs {
        let violation = if !topology.has_edge(m.sender, m.receiver) {
            Some(ProtocolViolation::NotNeighbor {
                sender: m.sender,
                receiver: m.receiver,
            })
        } else if !sends_in(topology, m.sender, clock.phase) || m.clock() != clock {
            Some(ProtocolViolation::WrongPhase {
                sender: m.sender,
                phase: m.phase,
            })
        } else {
            None
        };
        if let Some(source) = violation {
            return Err(SimError::Violation { clock, source });
        }
    }
    Ok(())
}

/// Runs one execution for `max_rounds` rounds.
///
/// Corrupted nodes keep a proposal machine (what they would send if correct,
/// exposed to the strategy) and a set of candidate correct executions fed
/// with the same inbox; the round in which the last candidate is ruled out
/// is recorded as that node's deviation round.
pub fn run_execution(spec: &RunSpec) -> Result<ExecutionTrace, SimError> {
    spec.validate()?;
    let topology = spec.topology.build();
    let n = topology.node_count();
    let generals = spec.generals();
    let corruption = &spec.adversary.corruption;
    let wrap = |clock: RoundClock| move |source| SimError::Violation { clock, source };

    let mut nodes = Vec::with_capacity(n);
    for id in 0..n {
        nodes.push(spec.proposal_machine(id).map_err(wrap(RoundClock::START))?);
    }
    let mut candidates: BTreeMap<NodeId, Vec<Machine>> = BTreeMap::new();
    for id in corruption.iter() {
        candidates.insert(id, spec.candidates(id).map_err(wrap(RoundClock::START))?);
    }

    let mut trace = ExecutionTrace::new(TraceHeader::new(spec.clone()));
    for round in 0..spec.max_rounds {
        for &phase in spec.topology.phases() {
            let clock = RoundClock::new(round, phase);
            let mut proposed = Vec::new();
            let mut plans: BTreeMap<NodeId, Vec<Vec<Message>>> = BTreeMap::new();
            for sender in topology.nodes().filter(|&s| sends_in(&topology, s, phase)) {
                let outs = nodes[sender].take_outbox(clock);
                proposed.extend(expand(&topology, sender, clock, &outs));
                if let Some(cands) = candidates.get_mut(&sender) {
                    let p = cands
                        .iter_mut()
                        .map(|c| expand(&topology, sender, clock, &c.take_outbox(clock)))
                        .collect();
                    plans.insert(sender, p);
                }
            }
            let actual = spec.adversary.apply(clock, &topology, generals, &proposed)?;
            check_discipline(&topology, clock, &actual)?;

            for (sender, sender_plans) in plans {
                let sent: Vec<Message> = actual.iter().filter(|m| m.sender == sender).copied().collect();
                let cands = candidates.get_mut(&sender).expect("corrupted sender");
                let mut keep = sender_plans.iter().map(|p| matches_plan(&sent, p));
                cands.retain(|_| keep.next().expect("one plan per candidate"));
                if cands.is_empty() && !trace.deviations.contains_key(&sender) {
                    trace.deviations.insert(sender, round);
                }
            }

            let mut inboxes: BTreeMap<NodeId, Vec<Message>> = BTreeMap::new();
            for m in &actual {
                inboxes.entry(m.receiver).or_default().push(*m);
            }
            for receiver in topology.nodes().filter(|&r| receives_in(&topology, r, phase)) {
                let inbox = inboxes.get(&receiver).map(Vec::as_slice).unwrap_or(&[]);
                let events = nodes[receiver].deliver(clock, inbox).map_err(wrap(clock))?;
                if corruption.contains(receiver) {
                    for c in candidates.get_mut(&receiver).expect("corrupted receiver") {
                        c.deliver(clock, inbox).map_err(wrap(clock))?;
                    }
                } else {
                    trace.accepts.extend(events);
                }
            }
            trace.messages.extend(actual);
        }
        for node in &mut nodes {
            if let Some(ev) = node.end_of_round(round) {
                if !corruption.contains(ev.node) {
                    trace.agrees.push(ev);
                }
            }
        }
        for cands in candidates.values_mut() {
            for c in cands {
                c.end_of_round(round);
            }
        }
        trace.snapshots.push(RoundSnapshot {
            round,
            nodes: (0..n)
                .filter(|&i| !corruption.contains(i))
                .map(|i| NodeSnapshot {
                    node: i,
                    x: nodes[i].x(),
                    s: nodes[i].decision(),
                })
                .collect(),
            revealed_faulty: trace.deviations.len(),
        });
    }
    trace.finish();
    Ok(trace)
}

/// Whether `node` receives in `phase`.
pub fn receives_in(topology: &Topology, node: NodeId, phase: Phase) -> bool {
    match topology.partition() {
        Some(_) => !sends_in(topology, node, phase),
        None => phase == Phase::AToB,
    }
}

/// Re-runs the execution described by a trace header.
pub fn replay(header: &TraceHeader) -> Result<ExecutionTrace, SimError> {
    if header.version != TRACE_VERSION {
        return Err(SimError::Version {
            found: header.version,
            expected: TRACE_VERSION,
        });
    }
    run_execution(&header.spec)
}

/// Accept rounds per correct node and General (`None` = never accepted).
pub fn accept_matrix(trace: &ExecutionTrace) -> BTreeMap<NodeId, Vec<Option<u32>>> {
    let spec = &trace.header.spec;
    let generals = spec.generals();
    let mut out: BTreeMap<NodeId, Vec<Option<u32>>> = (0..spec.topology.node_count())
        .filter(|&i| !spec.adversary.corruption.contains(i))
        .map(|i| (i, vec![None; generals]))
        .collect();
    for AcceptEvent {
        node, general, round, ..
    } in &trace.accepts
    {
        if let Some(row) = out.get_mut(node) {
            let slot = &mut row[general.index()];
            if slot.is_none() {
                *slot = Some(*round);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{CorruptionSet, Strategy};
    use std::collections::BTreeSet;

    fn k44_bcast(inits: Vec<InitValue>, adversary: AdversaryScript) -> RunSpec {
        RunSpec::new(
            TopologySpec::CompleteBipartite { n_a: 4, n_b: 4 },
            ProtocolSpec::BiBroadcast {
                f_a: 1,
                f_b: 1,
                generals: 1,
            },
            inits,
            adversary,
        )
    }

    fn lever(n: usize, f: usize, v: bool, adversary: AdversaryScript) -> RunSpec {
        RunSpec::new(
            TopologySpec::CompleteBipartite { n_a: n, n_b: n },
            ProtocolSpec::BaLever {
                f_a: f,
                f_b: f,
                g0: GeneralId(0),
                side_a_rule: SideARule::default(),
            },
            InitValue::uniform(0..n, GeneralId(0), v),
            adversary,
        )
    }

    #[test]
    fn unanimous_broadcast_accepts_in_round_zero() {
        let spec = k44_bcast(InitValue::uniform(0..4, GeneralId(0), true), AdversaryScript::silent());
        let trace = run_execution(&spec).unwrap();
        let acc = accept_matrix(&trace);
        assert_eq!(acc.len(), 8);
        assert!(acc.values().all(|r| r[0] == Some(0)));
    }

    #[test]
    fn zero_rounds_is_empty() {
        let spec = k44_bcast(InitValue::uniform(0..4, GeneralId(0), true), AdversaryScript::silent()).with_rounds(0);
        let trace = run_execution(&spec).unwrap();
        assert!(trace.messages.is_empty());
        assert!(trace.snapshots.is_empty());
        assert!(trace.accepts.is_empty());
    }

    #[test]
    fn lever_unanimous_one_with_silent_faults() {
        let adv = AdversaryScript::new(CorruptionSet::new([3, 7]), Strategy::Silent);
        let trace = run_execution(&lever(4, 1, true, adv)).unwrap();
        assert_eq!(trace.agrees.len(), 6);
        assert!(trace.agrees.iter().all(|a| a.value && a.round == 2));
    }

    #[test]
    fn lever_all_zero() {
        let trace = run_execution(&lever(4, 1, false, AdversaryScript::silent())).unwrap();
        assert_eq!(trace.agrees.len(), 8);
        assert!(trace.agrees.iter().all(|a| !a.value));
        assert!(trace.messages.iter().all(|m| !m.value));
    }

    #[test]
    fn silence_of_a_faulty_input_node_counts_as_deviation_only_if_unexplained() {
        // silent faulty A node with input 1 is indistinguishable from a correct
        // node with input 0 until it fails to relay
        let adv = AdversaryScript::new(CorruptionSet::new([0]), Strategy::Silent);
        let trace = run_execution(&k44_bcast(InitValue::uniform(0..4, GeneralId(0), true), adv)).unwrap();
        assert_eq!(trace.deviations.get(&0), Some(&1));
        let adv = AdversaryScript::new(
            CorruptionSet::new([0]),
            Strategy::Split {
                ones_to: BTreeSet::from([4]),
            },
        );
        let trace = run_execution(&k44_bcast(InitValue::uniform(0..4, GeneralId(0), true), adv)).unwrap();
        assert_eq!(trace.deviations.get(&0), Some(&0));
    }

    #[test]
    fn consistent_strategy_does_not_deviate() {
        let adv = AdversaryScript::new(CorruptionSet::new([0, 4]), Strategy::Consistent { value: true });
        let trace = run_execution(&k44_bcast(InitValue::uniform(1..4, GeneralId(0), false), adv)).unwrap();
        assert!(trace.deviations.is_empty());
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let bad = RunSpec::new(
            TopologySpec::Complete { n: 3 },
            ProtocolSpec::BroadcastKn { f: 1, generals: 1 },
            vec![],
            AdversaryScript::silent(),
        );
        assert!(matches!(
            run_execution(&bad),
            Err(SimError::Config(ConfigError::CompleteTooSmall { n: 3, f: 1 }))
        ));
        let over = k44_bcast(
            vec![],
            AdversaryScript::new(CorruptionSet::new([0, 1]), Strategy::Silent),
        );
        assert!(matches!(
            run_execution(&over),
            Err(SimError::Adversary(AdversaryError::OverBudget { .. }))
        ));
        let b_input = k44_bcast(InitValue::uniform([5], GeneralId(0), true), AdversaryScript::silent());
        assert!(matches!(run_execution(&b_input), Err(SimError::Invalid(_))));
        let short = lever(4, 1, true, AdversaryScript::silent()).with_rounds(2);
        assert!(matches!(run_execution(&short), Err(SimError::Invalid(_))));
    }

    #[test]
    fn kn_unanimous_accepts_round_zero() {
        let spec = RunSpec::new(
            TopologySpec::Complete { n: 4 },
            ProtocolSpec::BroadcastKn { f: 1, generals: 1 },
            InitValue::uniform(0..4, GeneralId(0), true),
            AdversaryScript::new(CorruptionSet::new([2]), Strategy::Silent),
        );
        let trace = run_execution(&spec).unwrap();
        let acc = accept_matrix(&trace);
        assert!(acc.values().all(|r| r[0] == Some(0)), "{acc:?}");
    }
}
