use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{expand, receives_in, Machine, ProtocolSpec, RunSpec, SimError};
use crate::adversary::{sends_in, ExplicitScript};
use crate::agreement::invariant_i;
use crate::analysis::{consistent_input, dirac_check, heaviside_check, Witness};
use crate::broadcast::{GeneralId, Message, Phase, RoundClock};
use crate::topology::{NodeId, Topology};

/// An exhaustive check: every explicit script of `horizon` adversarial
/// rounds against the spec's protocol, inputs and corruption set. The spec's
/// strategy and round count are ignored.
///
/// Broadcast runs continue with a silent adversary until no correct node has
/// anything left to send, then 1-Heaviside and 1-Dirac are judged over all
/// correct nodes. Agreement runs stop after round `k_f`; termination,
/// agreement, validity and invariant I are judged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreSpec {
    pub run: RunSpec,
    pub horizon: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "kebab-case")]
pub enum Violation {
    Heaviside { witness: Witness },
    Dirac { witness: Witness },
    Agreement { witness: Witness },
    Validity { witness: Witness },
    Termination { witness: Witness },
    InvariantI { witness: Witness },
}

impl Violation {
    pub fn property(&self) -> &'static str {
        match self {
            Violation::Heaviside { .. } => "heaviside",
            Violation::Dirac { .. } => "dirac",
            Violation::Agreement { .. } => "agreement",
            Violation::Validity { .. } => "validity",
            Violation::Termination { .. } => "termination",
            Violation::InvariantI { .. } => "invariant-i",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub violation: Violation,
    /// Adversary bits reproducing the violation with `run_execution`.
    pub script: ExplicitScript,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreOutcome {
    /// Scripts covered; equals `2^bits` of the script space.
    pub total: u128,
    /// Scripts whose execution violates a judged property.
    pub failing: u128,
    /// Most value-1 messages sent by correct nodes in any covered execution.
    pub max_correct_ones: u64,
    /// Distinct (slot, state) pairs visited.
    pub states: usize,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    /// `None` for corrupted nodes.
    nodes: Vec<Option<Machine>>,
    /// Surviving candidate executions per corrupted node, when tracked.
    candidates: Vec<Vec<Machine>>,
}

#[derive(Debug, Clone)]
struct Outcome {
    total: u128,
    failing: u128,
    max_ones: u64,
    witness: Option<(Violation, Vec<Vec<Message>>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Received {
    Correct(Machine),
    Tracked(Vec<Machine>),
    Untracked,
}

struct Class {
    received: Received,
    masks: Vec<u64>,
    count: u128,
    faulty_ones: Vec<Message>,
}

struct Explorer<'a> {
    spec: &'a RunSpec,
    topology: Topology,
    generals: usize,
    corrupt: Vec<NodeId>,
    track: bool,
    horizon: u32,
    k_f: Option<u32>,
    round_cap: u32,
    memo: HashMap<(RoundClock, State), Outcome>,
}

/// Runs the exhaustive check; see [`ExploreSpec`].
pub fn explore(spec: &ExploreSpec) -> Result<ExploreOutcome, SimError> {
    let run = &spec.run;
    let mut probe = run.clone();
    probe.max_rounds = probe
        .max_rounds
        .max(probe.agreement_config().map_or(0, |c| c.k_f() + 1));
    probe.validate()?;
    let topology = run.topology.build();
    let n = topology.node_count();
    let corrupt: Vec<NodeId> = run.adversary.corruption.iter().collect();
    let track = run.protocol.is_agreement();
    let wrap = |source| SimError::Violation {
        clock: RoundClock::START,
        source,
    };

    let mut nodes = Vec::with_capacity(n);
    for id in 0..n {
        if run.adversary.corruption.contains(id) {
            nodes.push(None);
            continue;
        }
        let mut m = run.machine(id);
        for init in run.inits.iter().filter(|i| i.node == id) {
            m.init(init.general, init.value).map_err(wrap)?;
        }
        nodes.push(Some(m));
    }
    let mut candidates = Vec::new();
    if track {
        for &id in &corrupt {
            let c = run.candidates(id).map_err(wrap)?;
            if c.len() > 64 {
                return Err(SimError::Invalid(
                    "deviation tracking supports at most 6 input Generals".into(),
                ));
            }
            candidates.push(c);
        }
    }
    let generals = run.generals();
    let mut ex = Explorer {
        spec: run,
        topology,
        generals,
        corrupt,
        track,
        horizon: spec.horizon,
        k_f: run.agreement_config().map(|c| c.k_f()),
        round_cap: spec.horizon + (n * generals) as u32 + 2,
        memo: HashMap::new(),
    };
    let out = ex.visit(RoundClock::START, State { nodes, candidates })?;
    let counterexample = out.witness.map(|(violation, slots)| {
        let mut script = ExplicitScript::new();
        for m in slots.into_iter().flatten() {
            script.set(m.clock(), m.sender, m.receiver, m.general, true);
        }
        Counterexample { violation, script }
    });
    Ok(ExploreOutcome {
        total: out.total,
        failing: out.failing,
        max_correct_ones: out.max_ones,
        states: ex.memo.len(),
        counterexample,
    })
}

impl Explorer<'_> {
    fn corrupt_index(&self, node: NodeId) -> Option<usize> {
        self.corrupt.binary_search(&node).ok()
    }

    fn last_phase(&self) -> Phase {
        *self.spec.topology.phases().last().expect("at least one phase")
    }

    fn next_clock(&self, clock: RoundClock) -> RoundClock {
        if clock.phase == self.last_phase() {
            RoundClock::new(clock.round + 1, Phase::AToB)
        } else {
            clock.next()
        }
    }

    fn visit(&mut self, clock: RoundClock, state: State) -> Result<Outcome, SimError> {
        let key = (clock, state);
        if let Some(o) = self.memo.get(&key) {
            return Ok(o.clone());
        }
        let out = self.step(clock, &key.1)?;
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    fn step(&mut self, clock: RoundClock, state: &State) -> Result<Outcome, SimError> {
        let topology = self.topology.clone();
        let topo = &topology;
        let adversarial = clock.round < self.horizon;
        let mut base = state.clone();

        let mut correct: Vec<Message> = Vec::new();
        for s in topo.nodes().filter(|&s| sends_in(topo, s, clock.phase)) {
            if let Some(m) = base.nodes[s].as_mut() {
                correct.extend(expand(topo, s, clock, &m.take_outbox(clock)));
            }
        }
        let ones = correct.iter().filter(|m| m.value).count() as u64;
        let faulty_senders: Vec<NodeId> = self
            .corrupt
            .iter()
            .copied()
            .filter(|&s| sends_in(topo, s, clock.phase))
            .collect();
        let mut plans: Vec<Vec<Vec<Message>>> = Vec::new();
        for &s in &faulty_senders {
            let mut p = Vec::new();
            if self.track {
                let ci = self.corrupt_index(s).expect("corrupted");
                for c in &mut base.candidates[ci] {
                    p.push(expand(topo, s, clock, &c.take_outbox(clock)));
                }
            }
            plans.push(p);
        }

        let receivers: Vec<NodeId> = topo.nodes().filter(|&r| receives_in(topo, r, clock.phase)).collect();
        let mut per_receiver: Vec<Vec<Class>> = Vec::with_capacity(receivers.len());
        for &r in &receivers {
            per_receiver.push(self.classes(clock, &base, r, &correct, &faulty_senders, &plans, adversarial)?);
        }

        let mut out = Outcome {
            total: 0,
            failing: 0,
            max_ones: 0,
            witness: None,
        };
        let mut digits = vec![0usize; receivers.len()];
        loop {
            let mut succ = base.clone();
            let mut weight: u128 = 1;
            let mut masks = vec![0u64; faulty_senders.len()];
            let mut chosen = Vec::new();
            for (ri, &r) in receivers.iter().enumerate() {
                let class = &per_receiver[ri][digits[ri]];
                weight *= class.count;
                for (i, m) in class.masks.iter().enumerate() {
                    masks[i] |= m;
                }
                chosen.extend_from_slice(&class.faulty_ones);
                match &class.received {
                    Received::Correct(m) => succ.nodes[r] = Some(m.clone()),
                    Received::Tracked(c) => succ.candidates[self.corrupt_index(r).expect("corrupted")] = c.clone(),
                    Received::Untracked => {}
                }
            }
            if self.track {
                for (i, &s) in faulty_senders.iter().enumerate() {
                    let ci = self.corrupt_index(s).expect("corrupted");
                    let mut j = 0;
                    succ.candidates[ci].retain(|_| {
                        let keep = masks[i] >> j & 1 == 0;
                        j += 1;
                        keep
                    });
                }
            }

            let mut violation = None;
            let mut leaf = false;
            if clock.phase == self.last_phase() {
                for m in succ.nodes.iter_mut().flatten() {
                    m.end_of_round(clock.round);
                }
                for c in succ.candidates.iter_mut().flatten() {
                    c.end_of_round(clock.round);
                }
                if self.k_f.is_some() {
                    violation = self.check_invariant(&succ, clock.round);
                }
                leaf = match self.k_f {
                    Some(k_f) => clock.round >= k_f,
                    None => {
                        let next = RoundClock::new(clock.round + 1, Phase::AToB);
                        let idle = succ.nodes.iter().flatten().all(|m| m.planned(next).is_empty());
                        (clock.round + 1 >= self.horizon && idle) || clock.round + 1 >= self.round_cap
                    }
                };
                if leaf && violation.is_none() {
                    violation = self.judge(&succ);
                }
            }

            let child = if leaf {
                Outcome {
                    total: 1,
                    failing: 0,
                    max_ones: 0,
                    witness: None,
                }
            } else {
                self.visit(self.next_clock(clock), succ)?
            };
            out.total += weight * child.total;
            out.max_ones = out.max_ones.max(child.max_ones);
            match violation {
                Some(v) => {
                    out.failing += weight * child.total;
                    if out.witness.is_none() {
                        out.witness = Some((v, vec![chosen]));
                    }
                }
                None => {
                    out.failing += weight * child.failing;
                    if out.witness.is_none() {
                        if let Some((v, mut rest)) = child.witness {
                            rest.insert(0, chosen);
                            out.witness = Some((v, rest));
                        }
                    }
                }
            }

            let mut i = 0;
            loop {
                if i == digits.len() {
                    out.max_ones += ones;
                    return Ok(out);
                }
                digits[i] += 1;
                if digits[i] < per_receiver[i].len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    /// Groups the adversary's choices of bits towards `r` by their effect.
    #[allow(clippy::too_many_arguments)]
    fn classes(
        &self,
        clock: RoundClock,
        base: &State,
        r: NodeId,
        correct: &[Message],
        faulty_senders: &[NodeId],
        plans: &[Vec<Vec<Message>>],
        adversarial: bool,
    ) -> Result<Vec<Class>, SimError> {
        let wrap = |source| SimError::Violation { clock, source };
        let slots: Vec<(usize, NodeId, GeneralId)> = faulty_senders
            .iter()
            .enumerate()
            .filter(|&(_, &s)| self.topology.has_edge(s, r))
            .flat_map(|(i, &s)| (0..self.generals).map(move |g| (i, s, GeneralId(g as u32))))
            .collect();
        let combos: u64 = if adversarial { 1 << slots.len() } else { 1 };
        let inbox_base: Vec<Message> = correct.iter().filter(|m| m.receiver == r).copied().collect();
        let corrupted_receiver = self.corrupt_index(r);
        let mut classes: Vec<Class> = Vec::new();
        let mut index: HashMap<(Received, Vec<u64>), usize> = HashMap::new();
        for c in 0..combos {
            let mut inbox = inbox_base.clone();
            let mut faulty_ones = Vec::new();
            for (j, &(_, s, g)) in slots.iter().enumerate() {
                let value = c >> j & 1 == 1;
                let m = Message {
                    round: clock.round,
                    phase: clock.phase,
                    sender: s,
                    receiver: r,
                    general: g,
                    value,
                };
                if value {
                    faulty_ones.push(m);
                }
                inbox.push(m);
            }
            inbox.sort_by_key(|m| (m.sender, m.general));
            let received = match corrupted_receiver {
                None => {
                    let mut m = base.nodes[r].clone().expect("correct receiver");
                    m.deliver(clock, &inbox).map_err(wrap)?;
                    m.clear_slots(faulty_senders);
                    Received::Correct(m)
                }
                Some(ci) if self.track => {
                    let mut cands = base.candidates[ci].clone();
                    for m in &mut cands {
                        m.deliver(clock, &inbox).map_err(wrap)?;
                        m.clear_slots(faulty_senders);
                    }
                    Received::Tracked(cands)
                }
                Some(_) => Received::Untracked,
            };
            let mut masks = vec![0u64; faulty_senders.len()];
            if self.track {
                for (i, &s) in faulty_senders.iter().enumerate() {
                    if !self.topology.has_edge(s, r) {
                        continue;
                    }
                    for (k, plan) in plans[i].iter().enumerate() {
                        let differs = (0..self.generals).any(|g| {
                            let g = GeneralId(g as u32);
                            let want = plan.iter().any(|m| m.receiver == r && m.general == g && m.value);
                            let got = inbox.iter().any(|m| m.sender == s && m.general == g && m.value);
                            want != got
                        });
                        if differs {
                            masks[i] |= 1 << k;
                        }
                    }
                }
            }
            let key = (received, masks);
            match index.get(&key) {
                Some(&i) => classes[i].count += 1,
                None => {
                    index.insert(key.clone(), classes.len());
                    classes.push(Class {
                        received: key.0,
                        masks: key.1,
                        count: 1,
                        faulty_ones,
                    });
                }
            }
        }
        if !adversarial {
            // bits past the horizon are fixed to 0 and not part of the script space
            debug_assert_eq!(classes.len(), 1);
        }
        Ok(classes)
    }

    fn check_invariant(&self, state: &State, round: u32) -> Option<Violation> {
        let p = self.spec.topology.partition()?;
        let s: Vec<bool> = p
            .side_b()
            .filter_map(|i| state.nodes[i].as_ref())
            .filter_map(Machine::decision)
            .collect();
        let revealed = state.candidates.iter().filter(|c| c.is_empty()).count();
        (!invariant_i(&s, revealed, round)).then(|| Violation::InvariantI {
            witness: Witness::at_round(
                round,
                format!("side-B decisions {s:?} mixed with {revealed} revealed faulty"),
            ),
        })
    }

    fn judge(&self, state: &State) -> Option<Violation> {
        let correct: Vec<&Machine> = state.nodes.iter().flatten().collect();
        if let Some(k_f) = self.k_f {
            let mut z = Vec::new();
            for m in &correct {
                match m.final_decision() {
                    Some(v) => z.push((m.id(), v)),
                    None => {
                        return Some(Violation::Termination {
                            witness: Witness::at_node(m.id(), format!("no decision at round {k_f}")),
                        })
                    }
                }
            }
            if let Some(&(node, _)) = z.iter().find(|&&(_, v)| v != z[0].1) {
                return Some(Violation::Agreement {
                    witness: Witness::at_node(
                        node,
                        format!("decided {} while node {} decided {}", !z[0].1, z[0].0, z[0].1),
                    ),
                });
            }
            if let Some(v) = consistent_input(self.spec, self.g0()) {
                if let Some(&(node, got)) = z.iter().find(|&&(_, got)| got != v) {
                    return Some(Violation::Validity {
                        witness: Witness::at_node(node, format!("decided {got} with unanimous input {v}")),
                    });
                }
            }
            return None;
        }
        for g in 0..self.generals {
            let general = GeneralId(g as u32);
            let accepts: Vec<(NodeId, Option<u32>)> = correct.iter().map(|m| (m.id(), m.accepted_at()[g])).collect();
            if let Err(witness) = heaviside_check(consistent_input(self.spec, general), &accepts, 1, 0) {
                return Some(Violation::Heaviside {
                    witness: witness.with_general(general),
                });
            }
            if let Err(witness) = dirac_check(&accepts, 1, None) {
                return Some(Violation::Dirac {
                    witness: witness.with_general(general),
                });
            }
        }
        None
    }

    fn g0(&self) -> GeneralId {
        match self.spec.protocol {
            ProtocolSpec::BaLever { g0, .. } => g0,
            _ => GeneralId(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{enumerate_scripts, AdversaryScript, CorruptionSet, Strategy, DEFAULT_SCRIPT_CAP};
    use crate::analysis::all_verdicts;
    use crate::simulator::{run_execution, InitValue, TopologySpec};

    fn brute_force(spec: &ExploreSpec) -> (u128, u128) {
        let topo = spec.run.topology.build();
        let space = enumerate_scripts(
            &spec.run.adversary.corruption,
            &topo,
            spec.run.generals(),
            spec.horizon,
            DEFAULT_SCRIPT_CAP,
        )
        .unwrap();
        let (mut total, mut failing) = (0, 0);
        for script in space.iter() {
            let mut run = spec.run.clone();
            run.adversary = AdversaryScript::new(run.adversary.corruption.clone(), Strategy::Explicit { script })
                .with_horizon(spec.horizon);
            run.max_rounds = run.default_rounds();
            let trace = run_execution(&run).unwrap();
            total += 1;
            failing += u128::from(all_verdicts(&trace).iter().any(|v| !v.holds));
        }
        (total, failing)
    }

    fn kn(inits: [bool; 4], faulty: NodeId, horizon: u32, offset: i64) -> ExploreSpec {
        let mut run = RunSpec::new(
            TopologySpec::Complete { n: 4 },
            ProtocolSpec::BroadcastKn { f: 1, generals: 1 },
            (0..4)
                .map(|i| InitValue {
                    node: i,
                    general: GeneralId(0),
                    value: inits[i],
                })
                .collect(),
            AdversaryScript::new(CorruptionSet::new([faulty]), Strategy::Silent),
        );
        run.accept_offset = offset;
        ExploreSpec { run, horizon }
    }

    fn k44(inits: [bool; 4], faulty: [NodeId; 2], horizon: u32, lever: bool) -> ExploreSpec {
        let protocol = if lever {
            ProtocolSpec::BaLever {
                f_a: 1,
                f_b: 1,
                g0: GeneralId(0),
                side_a_rule: Default::default(),
            }
        } else {
            ProtocolSpec::BiBroadcast {
                f_a: 1,
                f_b: 1,
                generals: 1,
            }
        };
        let run = RunSpec::new(
            TopologySpec::CompleteBipartite { n_a: 4, n_b: 4 },
            protocol,
            (0..4)
                .map(|i| InitValue {
                    node: i,
                    general: GeneralId(0),
                    value: inits[i],
                })
                .collect(),
            AdversaryScript::new(CorruptionSet::new(faulty), Strategy::Silent),
        );
        ExploreSpec { run, horizon }
    }

    #[test]
    fn kn_matches_brute_force() {
        for inits in [[true; 4], [false; 4], [true, false, true, false]] {
            let spec = kn(inits, 1, 2, 0);
            let out = explore(&spec).unwrap();
            assert_eq!((out.total, out.failing), brute_force(&spec));
            assert_eq!(out.failing, 0);
        }
    }

    #[test]
    fn bipartite_matches_brute_force() {
        for inits in [[true; 4], [true, true, false, false]] {
            let spec = k44(inits, [0, 5], 1, false);
            let out = explore(&spec).unwrap();
            assert_eq!(out.total, 1 << 8);
            assert_eq!((out.total, out.failing), brute_force(&spec));
        }
    }

    #[test]
    fn lever_matches_brute_force_on_one_round() {
        let spec = k44([true, false, true, true], [1, 4], 1, true);
        let out = explore(&spec).unwrap();
        assert_eq!(out.total, 1 << 32);
        let small = ExploreSpec {
            horizon: 0,
            ..spec.clone()
        };
        let out0 = explore(&small).unwrap();
        assert_eq!((out0.total, out0.failing), brute_force(&small));
    }

    fn lever_single(n_a: usize, n_b: usize, f_b: usize, inits: &[bool], faulty: NodeId, horizon: u32) -> ExploreSpec {
        let run = RunSpec::new(
            TopologySpec::CompleteBipartite { n_a, n_b },
            ProtocolSpec::BaLever {
                f_a: 1,
                f_b,
                g0: GeneralId(0),
                side_a_rule: Default::default(),
            },
            (0..n_a)
                .map(|i| InitValue {
                    node: i,
                    general: GeneralId(0),
                    value: inits[i],
                })
                .collect(),
            AdversaryScript::new(CorruptionSet::new([faulty]), Strategy::Silent),
        );
        ExploreSpec { run, horizon }
    }

    #[test]
    fn lever_matches_brute_force_with_one_corrupted_node() {
        for inits in [
            [true, false, false, false],
            [true, true, false, false],
            [true, true, true, true],
        ] {
            let spec = lever_single(4, 2, 0, &inits, 3, 1);
            let out = explore(&spec).unwrap();
            assert_eq!((out.total, out.failing), brute_force(&spec), "{inits:?}");
        }
        let spec = lever_single(4, 4, 1, &[true, true, false, false], 4, 1);
        let out = explore(&spec).unwrap();
        assert_eq!(out.total, 1 << 16);
        assert_eq!((out.total, out.failing), brute_force(&spec));
    }

    #[test]
    fn weakened_threshold_yields_replayable_counterexample() {
        let spec = kn([true, false, false, false], 3, 2, -1);
        assert_eq!(explore(&kn([true, false, false, false], 3, 2, 0)).unwrap().failing, 0);
        let out = explore(&spec).unwrap();
        assert!(out.failing > 0);
        let cex = out.counterexample.unwrap();
        let mut run = spec.run.clone();
        run.adversary = AdversaryScript::new(
            run.adversary.corruption.clone(),
            Strategy::Explicit { script: cex.script },
        )
        .with_horizon(spec.horizon);
        run.max_rounds = run.default_rounds();
        let trace = run_execution(&run).unwrap();
        assert!(all_verdicts(&trace).iter().any(|v| !v.holds));
    }
}
