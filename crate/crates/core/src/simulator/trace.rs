use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RunSpec, SimError};
use crate::agreement::AgreeEvent;
use crate::broadcast::{AcceptEvent, Message};
use crate::topology::NodeId;

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub spec: RunSpec,
}

impl TraceHeader {
    pub fn new(spec: RunSpec) -> Self {
        Self {
            version: TRACE_VERSION,
            spec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub node: NodeId,
    /// Excitation state per General.
    pub x: Vec<bool>,
    /// Agreement decision, for lever runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<bool>,
}

/// Correct nodes' state at the end of a round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSnapshot {
    pub round: u32,
    pub nodes: Vec<NodeSnapshot>,
    /// Corrupted nodes whose sends so far fit no correct execution (`f_k`).
    pub revealed_faulty: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub rounds: u32,
    pub messages: u64,
    pub correct_messages: u64,
    /// Value-1 messages sent by correct nodes.
    pub correct_ones: u64,
    pub adversary_messages: u64,
    pub adversary_ones: u64,
}

/// One line of the JSON-lines export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Record {
    Header(TraceHeader),
    Message(Message),
    Accept(AcceptEvent),
    Agree(AgreeEvent),
    Deviation { node: NodeId, round: u32 },
    Snapshot(RoundSnapshot),
    Summary(Metrics),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub header: TraceHeader,
    /// Every delivered message, in delivery order.
    pub messages: Vec<Message>,
    pub snapshots: Vec<RoundSnapshot>,
    pub accepts: Vec<AcceptEvent>,
    pub agrees: Vec<AgreeEvent>,
    /// Round in which each revealed corrupted node first deviated.
    pub deviations: BTreeMap<NodeId, u32>,
    pub metrics: Metrics,
}

impl ExecutionTrace {
    pub(crate) fn new(header: TraceHeader) -> Self {
        Self {
            header,
            messages: Vec::new(),
            snapshots: Vec::new(),
            accepts: Vec::new(),
            agrees: Vec::new(),
            deviations: BTreeMap::new(),
            metrics: Metrics::default(),
        }
    }

    pub(crate) fn finish(&mut self) {
        let corruption = &self.header.spec.adversary.corruption;
        let mut m = Metrics {
            rounds: self.snapshots.len() as u32,
            ..Metrics::default()
        };
        for msg in &self.messages {
            m.messages += 1;
            if corruption.contains(msg.sender) {
                m.adversary_messages += 1;
                m.adversary_ones += u64::from(msg.value);
            } else {
                m.correct_messages += 1;
                m.correct_ones += u64::from(msg.value);
            }
        }
        self.metrics = m;
    }

    /// Number of corrupted nodes revealed by the end of `round`.
    pub fn revealed_by(&self, round: u32) -> usize {
        self.deviations.values().filter(|&&r| r <= round).count()
    }

    /// Records in chronological order: the header, then for each round its
    /// messages, accepts, agrees, deviations and snapshot, then the summary.
    pub fn records(&self) -> Vec<Record> {
        let mut out = vec![Record::Header(self.header.clone())];
        let rounds = self.snapshots.len() as u32;
        for round in 0..rounds {
            out.extend(
                self.messages
                    .iter()
                    .filter(|m| m.round == round)
                    .map(|m| Record::Message(*m)),
            );
            out.extend(
                self.accepts
                    .iter()
                    .filter(|a| a.round == round)
                    .map(|a| Record::Accept(*a)),
            );
            out.extend(
                self.agrees
                    .iter()
                    .filter(|a| a.round == round)
                    .map(|a| Record::Agree(*a)),
            );
            out.extend(
                self.deviations
                    .iter()
                    .filter(|(_, &r)| r == round)
                    .map(|(&node, &round)| Record::Deviation { node, round }),
            );
            out.push(Record::Snapshot(self.snapshots[round as usize].clone()));
        }
        out.push(Record::Summary(self.metrics.clone()));
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in self.records() {
            s.push_str(&serde_json::to_string(&r).expect("trace records serialize"));
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Self, SimError> {
        let mut trace: Option<Self> = None;
        let mut summary = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line).map_err(|e| SimError::Trace {
                line: line_no,
                msg: e.to_string(),
            })?;
            let t = match (&mut trace, rec) {
                (None, Record::Header(h)) => {
                    trace = Some(Self::new(h));
                    continue;
                }
                (None, _) => {
                    return Err(SimError::Trace {
                        line: line_no,
                        msg: "first record must be the header".into(),
                    })
                }
                (Some(_), Record::Header(_)) => {
                    return Err(SimError::Trace {
                        line: line_no,
                        msg: "duplicate header".into(),
                    })
                }
                (Some(t), rec) => (t, rec),
            };
            match t.1 {
                Record::Header(_) => unreachable!(),
                Record::Message(m) => t.0.messages.push(m),
                Record::Accept(a) => t.0.accepts.push(a),
                Record::Agree(a) => t.0.agrees.push(a),
                Record::Deviation { node, round } => {
                    t.0.deviations.insert(node, round);
                }
                Record::Snapshot(s) => t.0.snapshots.push(s),
                Record::Summary(m) => {
                    t.0.metrics = m;
                    summary = true;
                }
            }
        }
        let trace = trace.ok_or(SimError::Trace {
            line: 0,
            msg: "empty trace".into(),
        })?;
        if !summary {
            return Err(SimError::Trace {
                line: text.lines().count(),
                msg: "missing summary record".into(),
            });
        }
        Ok(trace)
    }
}
