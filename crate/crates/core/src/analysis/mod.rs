//! Verdicts over execution traces, traffic accounting, poor-node quotas and
//! the assumption-coverage calculator.

mod coverage;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::invariant_i;
use crate::broadcast::GeneralId;
use crate::simulator::{accept_matrix, ExecutionTrace, ProtocolSpec, RunSpec};
use crate::topology::{NodeId, NpcResult};
use crate::Scalar;

pub use coverage::{
    binomial_tail_exact, coverage_exact, coverage_lower_bound, coverage_report, failure_closed_form, failure_exact,
    CoverageError, CoverageInput, CoverageReport,
};

/// Where a property failed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralId>,
    pub detail: String,
}

impl Witness {
    pub fn at_round(round: u32, detail: impl Into<String>) -> Self {
        Self {
            round: Some(round),
            detail: detail.into(),
            ..Self::default()
        }
    }

    pub fn at_node(node: NodeId, detail: impl Into<String>) -> Self {
        Self {
            node: Some(node),
            detail: detail.into(),
            ..Self::default()
        }
    }

    pub fn with_general(mut self, general: GeneralId) -> Self {
        self.general = Some(general);
        self
    }

    pub fn with_round(mut self, round: u32) -> Self {
        self.round = Some(round);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Property {
    Heaviside { k_h: u32 },
    Dirac { k_delta: u32 },
    Agreement,
    Validity,
    Termination,
    InvariantI,
    TrafficBound,
    PoorNodeQuota,
}

impl Property {
    pub fn name(&self) -> String {
        match self {
            Property::Heaviside { k_h } => format!("heaviside({k_h})"),
            Property::Dirac { k_delta } => format!("dirac({k_delta})"),
            Property::Agreement => "agreement".into(),
            Property::Validity => "validity".into(),
            Property::Termination => "termination".into(),
            Property::InvariantI => "invariant-i".into(),
            Property::TrafficBound => "traffic-bound".into(),
            Property::PoorNodeQuota => "poor-node-quota".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub property: Property,
    pub holds: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl PropertyVerdict {
    fn from_result(property: Property, r: Result<(), Witness>) -> Self {
        match r {
            Ok(()) => Self {
                property,
                holds: true,
                witness: None,
            },
            Err(w) => Self {
                property,
                holds: false,
                witness: Some(w),
            },
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("trace is not from an agreement run")]
    NotAgreement,
    #[error("trace is from an agreement run, not a broadcast run")]
    NotBroadcast,
    #[error("evaluation node {0} is corrupted or not in the topology")]
    BadEvaluationNode(NodeId),
}

/// Nodes whose input is part of a broadcast's initialization: side A on a
/// bipartite graph, everyone on `K_n`.
fn input_nodes(spec: &RunSpec) -> Vec<NodeId> {
    match spec.topology.partition() {
        Some(p) => p.side_a().collect(),
        None => (0..spec.topology.node_count()).collect(),
    }
}

/// The common input of all correct input nodes for `general` (absent inputs
/// read as 0), or `None` when they differ.
pub fn consistent_input(spec: &RunSpec, general: GeneralId) -> Option<bool> {
    let values: BTreeSet<bool> = input_nodes(spec)
        .into_iter()
        .filter(|&i| !spec.adversary.corruption.contains(i))
        .map(|i| {
            spec.inits
                .iter()
                .any(|v| v.node == i && v.general == general && v.value)
        })
        .collect();
    match values.len() {
        1 => values.into_iter().next(),
        _ => None,
    }
}

/// `k_H`-Heaviside over `(node, accept round)` pairs: with common input 1
/// every node accepts at a round in `[init_round, init_round + k_H)`; with
/// common input 0 nobody accepts. Inconsistent input (`None`) is vacuous.
pub fn heaviside_check(
    input: Option<bool>,
    accepts: &[(NodeId, Option<u32>)],
    k_h: u32,
    init_round: u32,
) -> Result<(), Witness> {
    match input {
        Some(true) => {
            for &(node, at) in accepts {
                match at {
                    Some(r) if r >= init_round && r - init_round < k_h => {}
                    Some(r) => {
                        return Err(Witness::at_node(
                            node,
                            format!("accepted at round {r}, outside [{init_round}, {})", init_round + k_h),
                        )
                        .with_round(r))
                    }
                    None => return Err(Witness::at_node(node, "never accepted a unanimous 1")),
                }
            }
            Ok(())
        }
        Some(false) => match accepts.iter().find(|(_, at)| at.is_some()) {
            Some(&(node, Some(r))) => Err(Witness::at_node(node, "accepted a unanimous 0").with_round(r)),
            _ => Ok(()),
        },
        None => Ok(()),
    }
}

/// `k_delta`-Dirac over `(node, accept round)` pairs: once someone accepts at
/// round `r`, everyone has accepted by `r + k_delta`. With `observed_until`
/// set, nodes that have not accepted are only blamed when `r + k_delta` was
/// observed; `None` means the execution is complete.
pub fn dirac_check(
    accepts: &[(NodeId, Option<u32>)],
    k_delta: u32,
    observed_until: Option<u32>,
) -> Result<(), Witness> {
    let Some(first) = accepts.iter().filter_map(|&(_, a)| a).min() else {
        return Ok(());
    };
    let deadline = first + k_delta;
    for &(node, at) in accepts {
        match at {
            Some(r) if r > deadline => {
                return Err(
                    Witness::at_node(node, format!("accepted at round {r}, first accept at {first}")).with_round(r),
                )
            }
            None if observed_until.is_none_or(|end| end >= deadline) => {
                return Err(Witness::at_node(
                    node,
                    format!("never accepted, first accept at round {first}"),
                ))
            }
            _ => {}
        }
    }
    Ok(())
}

fn eval_rows(
    trace: &ExecutionTrace,
    general: usize,
    eval: Option<&[NodeId]>,
) -> Result<Vec<(NodeId, Option<u32>)>, AnalysisError> {
    let matrix = accept_matrix(trace);
    match eval {
        None => Ok(matrix.iter().map(|(&n, row)| (n, row[general])).collect()),
        Some(set) => set
            .iter()
            .map(|&n| {
                matrix
                    .get(&n)
                    .map(|row| (n, row[general]))
                    .ok_or(AnalysisError::BadEvaluationNode(n))
            })
            .collect(),
    }
}

fn broadcast_only(trace: &ExecutionTrace) -> Result<(), AnalysisError> {
    if trace.header.spec.protocol.is_agreement() {
        Err(AnalysisError::NotBroadcast)
    } else {
        Ok(())
    }
}

/// `k_H`-Heaviside for every General, over the evaluation set (all correct
/// nodes by default).
pub fn verdict_heaviside(
    trace: &ExecutionTrace,
    k_h: u32,
    eval: Option<&[NodeId]>,
) -> Result<PropertyVerdict, AnalysisError> {
    broadcast_only(trace)?;
    let spec = &trace.header.spec;
    for g in 0..spec.generals() {
        let general = GeneralId(g as u32);
        let rows = eval_rows(trace, g, eval)?;
        if let Err(w) = heaviside_check(consistent_input(spec, general), &rows, k_h, 0) {
            return Ok(PropertyVerdict::from_result(
                Property::Heaviside { k_h },
                Err(w.with_general(general)),
            ));
        }
    }
    Ok(PropertyVerdict::from_result(Property::Heaviside { k_h }, Ok(())))
}

/// `k_delta`-Dirac for every General over the rounds the trace covers.
pub fn verdict_dirac(
    trace: &ExecutionTrace,
    k_delta: u32,
    eval: Option<&[NodeId]>,
) -> Result<PropertyVerdict, AnalysisError> {
    broadcast_only(trace)?;
    let last = trace.snapshots.len().checked_sub(1).map(|r| r as u32);
    for g in 0..trace.header.spec.generals() {
        let rows = eval_rows(trace, g, eval)?;
        if let Err(w) = dirac_check(&rows, k_delta, Some(last.unwrap_or(0))) {
            return Ok(PropertyVerdict::from_result(
                Property::Dirac { k_delta },
                Err(w.with_general(GeneralId(g as u32))),
            ));
        }
    }
    Ok(PropertyVerdict::from_result(Property::Dirac { k_delta }, Ok(())))
}

fn correct_nodes(spec: &RunSpec) -> Vec<NodeId> {
    (0..spec.topology.node_count())
        .filter(|&i| !spec.adversary.corruption.contains(i))
        .collect()
}

fn lever_g0(spec: &RunSpec) -> Result<(GeneralId, u32), AnalysisError> {
    match (spec.protocol, spec.agreement_config()) {
        (ProtocolSpec::BaLever { g0, .. }, Some(cfg)) => Ok((g0, cfg.k_f())),
        _ => Err(AnalysisError::NotAgreement),
    }
}

/// Every correct node emits exactly one agree event, at round `k_f`.
pub fn verdict_termination(trace: &ExecutionTrace) -> Result<PropertyVerdict, AnalysisError> {
    let (_, k_f) = lever_g0(&trace.header.spec)?;
    let r = correct_nodes(&trace.header.spec).into_iter().try_for_each(|node| {
        let mine: Vec<_> = trace.agrees.iter().filter(|a| a.node == node).collect();
        match mine.as_slice() {
            [a] if a.round == k_f => Ok(()),
            [a] => {
                Err(Witness::at_node(node, format!("agreed at round {}, expected {k_f}", a.round)).with_round(a.round))
            }
            other => Err(Witness::at_node(node, format!("{} agree events", other.len()))),
        }
    });
    Ok(PropertyVerdict::from_result(Property::Termination, r))
}

/// All correct nodes' agree values are equal.
pub fn verdict_agreement(trace: &ExecutionTrace) -> Result<PropertyVerdict, AnalysisError> {
    lever_g0(&trace.header.spec)?;
    let r = match trace.agrees.first() {
        None => Ok(()),
        Some(first) => match trace.agrees.iter().find(|a| a.value != first.value) {
            Some(a) => Err(Witness::at_node(
                a.node,
                format!("agreed {} while node {} agreed {}", a.value, first.node, first.value),
            )
            .with_round(a.round)),
            None => Ok(()),
        },
    };
    Ok(PropertyVerdict::from_result(Property::Agreement, r))
}

/// With unanimous correct input `v`, every agree value is `v`.
pub fn verdict_validity(trace: &ExecutionTrace) -> Result<PropertyVerdict, AnalysisError> {
    let spec = &trace.header.spec;
    let (g0, _) = lever_g0(spec)?;
    let r = match consistent_input(spec, g0) {
        Some(v) => match trace.agrees.iter().find(|a| a.value != v) {
            Some(a) => Err(
                Witness::at_node(a.node, format!("agreed {} with unanimous input {v}", a.value)).with_round(a.round),
            ),
            None => Ok(()),
        },
        None => Ok(()),
    };
    Ok(PropertyVerdict::from_result(Property::Validity, r))
}

/// Invariant I at the end of every recorded round, over correct side-B
/// decisions and the number of corrupted nodes revealed so far.
pub fn verdict_invariant_i(trace: &ExecutionTrace) -> Result<PropertyVerdict, AnalysisError> {
    let spec = &trace.header.spec;
    lever_g0(spec)?;
    let p = spec.topology.partition().ok_or(AnalysisError::NotAgreement)?;
    let r = trace.snapshots.iter().try_for_each(|snap| {
        let s: Vec<bool> = snap
            .nodes
            .iter()
            .filter(|n| p.side_of(n.node) == 1)
            .filter_map(|n| n.s)
            .collect();
        if invariant_i(&s, snap.revealed_faulty, snap.round) {
            Ok(())
        } else {
            Err(Witness::at_round(
                snap.round,
                format!(
                    "side-B decisions {s:?} mixed with {} revealed faulty",
                    snap.revealed_faulty
                ),
            ))
        }
    });
    Ok(PropertyVerdict::from_result(Property::InvariantI, r))
}

/// `max(1, ceil(log2 m))`: bits of a General identifier.
pub fn identifier_bits(m: usize) -> u64 {
    if m <= 1 {
        1
    } else {
        u64::from(usize::BITS - (m - 1).leading_zeros())
    }
}

/// Traffic budget of a protocol: every correct node excites at most once
/// per General, and each excitation costs one identifier per neighbor. For
/// the lever this is `2 n_A n_B^2 ceil(log2 n_B)`; for one bipartite General
/// `2 n_A n_B`.
pub fn traffic_bound(spec: &RunSpec) -> u64 {
    let m = spec.generals();
    let bits = identifier_bits(m);
    let links = match spec.topology.partition() {
        Some(p) => 2 * p.n_a as u64 * p.n_b as u64,
        None => {
            let n = spec.topology.node_count() as u64;
            n * n.saturating_sub(1)
        }
    };
    links * m as u64 * bits
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficStats {
    pub messages: u64,
    /// Value-1 messages sent by correct nodes, the ones charged.
    pub charged_messages: u64,
    pub bits: u64,
    pub bound_bits: u64,
    pub within_bound: bool,
    pub adversary_messages: u64,
    pub adversary_bits: u64,
}

/// Charges each value-1 message of a correct node one General identifier.
/// Zero-valued messages carry no excitation and are counted but not charged;
/// adversary traffic is reported separately.
pub fn traffic_stats(trace: &ExecutionTrace) -> TrafficStats {
    let spec = &trace.header.spec;
    let bits = identifier_bits(spec.generals());
    let m = &trace.metrics;
    let charged = m.correct_ones;
    let bound = traffic_bound(spec);
    TrafficStats {
        messages: m.messages,
        charged_messages: charged,
        bits: charged * bits,
        bound_bits: bound,
        within_bound: charged * bits <= bound,
        adversary_messages: m.adversary_messages,
        adversary_bits: m.adversary_ones * bits,
    }
}

pub fn verdict_traffic(trace: &ExecutionTrace) -> PropertyVerdict {
    let t = traffic_stats(trace);
    let r = if t.within_bound {
        Ok(())
    } else {
        Err(Witness {
            detail: format!("{} bits above the bound of {}", t.bits, t.bound_bits),
            ..Witness::default()
        })
    };
    PropertyVerdict::from_result(Property::TrafficBound, r)
}

/// Every verdict that applies to the trace's protocol.
pub fn all_verdicts(trace: &ExecutionTrace) -> Vec<PropertyVerdict> {
    let mut out = Vec::new();
    if trace.header.spec.protocol.is_agreement() {
        for f in [
            verdict_termination,
            verdict_agreement,
            verdict_validity,
            verdict_invariant_i,
        ] {
            out.push(f(trace).expect("agreement trace"));
        }
    } else {
        out.push(verdict_heaviside(trace, 1, None).expect("broadcast trace"));
        out.push(verdict_dirac(trace, 1, None).expect("broadcast trace"));
    }
    out.push(verdict_traffic(trace));
    out
}

/// Whether the non-poor correct nodes number at least `(1 - mu*alpha) n`.
pub fn poor_node_quota<T: Scalar>(npc: &NpcResult, mu: T, alpha: T, n: usize) -> PropertyVerdict {
    let have = npc.npc_count();
    let need = (T::one() - mu * alpha) * T::from_count(n);
    let r = if T::from_count(have) >= need {
        Ok(())
    } else {
        Err(Witness {
            detail: format!("{have} npc nodes, quota {need}"),
            ..Witness::default()
        })
    };
    PropertyVerdict::from_result(Property::PoorNodeQuota, r)
}

/// One row of the CSV verdict summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub scripts: String,
    pub property: String,
    pub holds: bool,
    pub counterexamples: String,
    pub messages: u64,
    pub bits: u64,
    pub rounds: u32,
}
