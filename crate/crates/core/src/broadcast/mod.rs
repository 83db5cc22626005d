//! Relay-based broadcast primitive.
//!
//! A node *relays* (sends the value 1 once per General) when at least `n - 2f`
//! opposite-side estimates are 1, and *accepts* the General when at least
//! `n - f` are. On `K_n` every node is on the same side and counts its own
//! state; on `K_{nA,nB}` side A counts side-B estimates and vice versa.
//!
//! Only the value 1 propagates. A 0 message is delivered and recorded but can
//! never push a count over a threshold.

mod bipartite;
mod complete;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::NodeId;

pub use bipartite::{BiNode, InstanceState};
pub use complete::KnNode;

/// Identifier of a broadcast instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneralId(pub u32);

impl GeneralId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Half of a synchronous round. On bipartite graphs phase one carries A→B
/// traffic and phase two B→A; on `K_n` every exchange happens in phase one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "A-to-B")]
    AToB,
    #[serde(rename = "B-to-A")]
    BToA,
}

impl Phase {
    pub fn number(self) -> u8 {
        match self {
            Phase::AToB => 1,
            Phase::BToA => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Phase::AToB),
            2 => Some(Phase::BToA),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoundClock {
    pub round: u32,
    pub phase: Phase,
}

impl RoundClock {
    pub const START: RoundClock = RoundClock {
        round: 0,
        phase: Phase::AToB,
    };

    pub fn new(round: u32, phase: Phase) -> Self {
        Self { round, phase }
    }

    /// Phases alternate; the round advances after phase two.
    pub fn next(self) -> Self {
        match self.phase {
            Phase::AToB => Self {
                round: self.round,
                phase: Phase::BToA,
            },
            Phase::BToA => Self {
                round: self.round + 1,
                phase: Phase::AToB,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Message {
    pub round: u32,
    pub phase: Phase,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub general: GeneralId,
    pub value: bool,
}

impl Message {
    pub fn clock(&self) -> RoundClock {
        RoundClock::new(self.round, self.phase)
    }
}

/// A planned send of `(general, value)` to every neighbor in the node's next
/// sending phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outgoing {
    pub clock: RoundClock,
    pub general: GeneralId,
    pub value: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AcceptEvent {
    pub node: NodeId,
    pub general: GeneralId,
    pub round: u32,
    pub phase: Phase,
}

/// Handler-level misuse. These are simulator bugs: the adversary only ever
/// acts through message values.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolViolation {
    #[error("node {receiver} got a message from non-neighbor {sender}")]
    NotNeighbor { sender: NodeId, receiver: NodeId },
    #[error("message addressed to {addressed} delivered to {receiver}")]
    WrongReceiver { addressed: NodeId, receiver: NodeId },
    #[error("message from {sender} sent in the wrong phase {phase:?}")]
    WrongPhase { sender: NodeId, phase: Phase },
    #[error("message stamped {stamped:?} delivered at {now:?}")]
    WrongClock { stamped: RoundClock, now: RoundClock },
    #[error("unknown General {0:?}")]
    UnknownGeneral(GeneralId),
    #[error("node {0} initialized after round 0 started")]
    InitAfterStart(NodeId),
    #[error("node {0} initialized twice for {1:?}")]
    Reinit(NodeId, GeneralId),
}

/// Relay and accept thresholds over an estimate vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Thresholds {
    pub relay: usize,
    pub accept: usize,
}

impl Thresholds {
    /// `n - 2f` to relay, `n - f` to accept, for an estimate over `n` nodes of
    /// which at most `f` are faulty.
    pub fn new(n: usize, f: usize) -> Self {
        Self {
            relay: n.saturating_sub(2 * f),
            accept: n.saturating_sub(f),
        }
    }

    /// Shifts the accept threshold. Only used to build deliberately broken
    /// variants that the exhaustive checker must reject.
    pub fn with_accept_offset(self, offset: i64) -> Self {
        let accept = (self.accept as i64 + offset).max(0) as usize;
        Self { accept, ..self }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("estimate has length {got}, expected {expected}")]
pub struct LengthMismatch {
    pub expected: usize,
    pub got: usize,
}

fn count_ones(estimate: &[bool]) -> usize {
    estimate.iter().filter(|&&b| b).count()
}

/// Relay decision on `K_n`: 1 iff at least `n - 2f` estimates are 1.
pub fn decide_relay_kn(estimate: &[bool], n: usize, f: usize) -> Result<bool, LengthMismatch> {
    if estimate.len() != n {
        return Err(LengthMismatch {
            expected: n,
            got: estimate.len(),
        });
    }
    Ok(count_ones(estimate) >= Thresholds::new(n, f).relay)
}

/// Accept decision on `K_n`: 1 iff at least `n - f` estimates are 1.
pub fn decide_accept_kn(estimate: &[bool], n: usize, f: usize) -> Result<bool, LengthMismatch> {
    if estimate.len() != n {
        return Err(LengthMismatch {
            expected: n,
            got: estimate.len(),
        });
    }
    Ok(count_ones(estimate) >= Thresholds::new(n, f).accept)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error(
        "n = {n} <= 3f = {}: fewer than 3f+1 nodes cannot tolerate f = {f} Byzantine nodes",
        3 * f
    )]
    CompleteTooSmall { n: usize, f: usize },
    #[error(
        "side {side}: n_{side} = {n} <= 3f_{side} = {}: fewer than 3f+1 nodes on a side cannot tolerate f = {f}",
        3 * f
    )]
    SideTooSmall { side: char, n: usize, f: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Size and corruption budget of a broadcast system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BroadcastConfig {
    Complete {
        n: usize,
        f: usize,
    },
    Bipartite {
        n_a: usize,
        n_b: usize,
        f_a: usize,
        f_b: usize,
    },
}

impl BroadcastConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            BroadcastConfig::Complete { n, f } => {
                if n <= 3 * f || n == 0 {
                    return Err(ConfigError::CompleteTooSmall { n, f });
                }
            }
            BroadcastConfig::Bipartite { n_a, n_b, f_a, f_b } => {
                if n_a <= 3 * f_a || n_a == 0 {
                    return Err(ConfigError::SideTooSmall {
                        side: 'A',
                        n: n_a,
                        f: f_a,
                    });
                }
                if n_b <= 3 * f_b || n_b == 0 {
                    return Err(ConfigError::SideTooSmall {
                        side: 'B',
                        n: n_b,
                        f: f_b,
                    });
                }
            }
        }
        Ok(())
    }

    /// Thresholds applied by side-A nodes (over side B), then side-B nodes
    /// (over side A). On `K_n` both entries are the same.
    pub fn thresholds(&self) -> [Thresholds; 2] {
        match *self {
            BroadcastConfig::Complete { n, f } => [Thresholds::new(n, f); 2],
            BroadcastConfig::Bipartite { n_a, n_b, f_a, f_b } => [Thresholds::new(n_b, f_b), Thresholds::new(n_a, f_a)],
        }
    }
}
