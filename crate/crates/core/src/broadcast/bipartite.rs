use std::collections::BTreeSet;

use super::{AcceptEvent, GeneralId, Message, Outgoing, Phase, ProtocolViolation, RoundClock, Thresholds};
use crate::topology::{NodeId, Partition};

/// Per-General state of one node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstanceState {
    /// Excitation state; monotone.
    pub x: bool,
    /// Relay latch: the value 1 has been (or is scheduled to be) sent.
    pub relayed: bool,
    /// Last value heard from each opposite-side node, indexed from the start
    /// of that side.
    pub estimate: Vec<bool>,
    pub accepted_at: Option<u32>,
}

impl InstanceState {
    fn new(len: usize) -> Self {
        Self {
            x: false,
            relayed: false,
            estimate: vec![false; len],
            accepted_at: None,
        }
    }

    pub fn ones(&self) -> usize {
        self.estimate.iter().filter(|&&b| b).count()
    }
}

/// A node of the two-phase bipartite broadcast running any number of
/// parallel Generals.
///
/// Side A receives in phase two and relays in phase one of the next round;
/// side B receives in phase one and relays in phase two of the same round.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BiNode {
    id: NodeId,
    partition: Partition,
    thresholds: Thresholds,
    instances: Vec<InstanceState>,
    /// Side-B node whose own message for a General counts as that
    /// General's input at side A.
    originators: Vec<Option<NodeId>>,
    initialized: Vec<bool>,
    outbox: Vec<Outgoing>,
    started: bool,
}

impl BiNode {
    /// Registers `generals` instances, all idle (`x = b = 0`, zero estimate).
    pub fn new(id: NodeId, partition: Partition, thresholds: Thresholds, generals: usize) -> Self {
        let other = partition.side_len(1 - partition.side_of(id));
        Self {
            id,
            partition,
            thresholds,
            instances: vec![InstanceState::new(other); generals],
            originators: vec![None; generals],
            initialized: vec![false; generals],
            outbox: Vec::new(),
            started: false,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    /// 0 for side A, 1 for side B.
    pub fn side(&self) -> usize {
        self.partition.side_of(self.id)
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn generals(&self) -> usize {
        self.instances.len()
    }

    pub fn instance(&self, general: GeneralId) -> Option<&InstanceState> {
        self.instances.get(general.index())
    }

    pub fn instances(&self) -> &[InstanceState] {
        &self.instances
    }

    pub fn set_originator(&mut self, general: GeneralId, node: NodeId) {
        self.originators[general.index()] = Some(node);
    }

    fn sending_phase(&self) -> Phase {
        if self.side() == 0 {
            Phase::AToB
        } else {
            Phase::BToA
        }
    }

    /// The slot in which a relay triggered while receiving in `round` goes out.
    fn relay_clock(&self, round: u32) -> RoundClock {
        if self.side() == 0 {
            RoundClock::new(round + 1, Phase::AToB)
        } else {
            RoundClock::new(round, Phase::BToA)
        }
    }

    /// Side-A initialization with input `v`: sets `x = b = v`, clears the
    /// estimate and sends `v` in phase one of round 0. A 0 input is still sent
    /// so receivers register the General.
    pub fn init(&mut self, general: GeneralId, value: bool) -> Result<(), ProtocolViolation> {
        if self.started {
            return Err(ProtocolViolation::InitAfterStart(self.id));
        }
        let i = general.index();
        if i >= self.instances.len() {
            return Err(ProtocolViolation::UnknownGeneral(general));
        }
        if self.initialized[i] {
            return Err(ProtocolViolation::Reinit(self.id, general));
        }
        self.initialized[i] = true;
        let inst = &mut self.instances[i];
        inst.x = value;
        inst.relayed = value;
        inst.estimate.iter_mut().for_each(|b| *b = false);
        self.outbox.push(Outgoing {
            clock: RoundClock::new(0, self.sending_phase()),
            general,
            value,
        });
        Ok(())
    }

    /// Starts this node's own broadcast of 1 for `general` in its next sending
    /// slot of `round`. A no-op when the node has already relayed.
    pub fn originate(&mut self, general: GeneralId, round: u32) -> Result<bool, ProtocolViolation> {
        let clock = RoundClock::new(round, self.sending_phase());
        let inst = self
            .instances
            .get_mut(general.index())
            .ok_or(ProtocolViolation::UnknownGeneral(general))?;
        if inst.relayed {
            return Ok(false);
        }
        inst.x = true;
        inst.relayed = true;
        self.outbox.push(Outgoing {
            clock,
            general,
            value: true,
        });
        Ok(true)
    }

    /// Folds one phase of incoming messages into the estimates, then applies
    /// the relay and accept rules to every General that received traffic.
    /// Thresholds are evaluated once all of the phase's messages are in, so
    /// delivery order inside a phase cannot change the outcome.
    pub fn deliver(&mut self, clock: RoundClock, inbox: &[Message]) -> Result<Vec<AcceptEvent>, ProtocolViolation> {
        self.started = true;
        let side = self.side();
        let other_start = self.partition.side(1 - side).start;
        let mut touched = BTreeSet::new();
        for msg in inbox {
            if msg.receiver != self.id {
                return Err(ProtocolViolation::WrongReceiver {
                    addressed: msg.receiver,
                    receiver: self.id,
                });
            }
            if msg.sender >= self.partition.n_a + self.partition.n_b || self.partition.side_of(msg.sender) == side {
                return Err(ProtocolViolation::NotNeighbor {
                    sender: msg.sender,
                    receiver: self.id,
                });
            }
            let expected_phase = if side == 0 { Phase::BToA } else { Phase::AToB };
            if msg.phase != expected_phase {
                return Err(ProtocolViolation::WrongPhase {
                    sender: msg.sender,
                    phase: msg.phase,
                });
            }
            if msg.clock() != clock {
                return Err(ProtocolViolation::WrongClock {
                    stamped: msg.clock(),
                    now: clock,
                });
            }
            let i = msg.general.index();
            let originator = *self
                .originators
                .get(i)
                .ok_or(ProtocolViolation::UnknownGeneral(msg.general))?;
            let inst = &mut self.instances[i];
            inst.estimate[msg.sender - other_start] = msg.value;
            if msg.value && originator == Some(msg.sender) {
                inst.x = true;
            }
            touched.insert(i);
        }

        let relay_clock = self.relay_clock(clock.round);
        let mut events = Vec::new();
        for i in touched {
            let inst = &mut self.instances[i];
            let ones = inst.ones();
            if ones >= self.thresholds.relay {
                inst.x = true;
            }
            if inst.x && !inst.relayed {
                inst.relayed = true;
                self.outbox.push(Outgoing {
                    clock: relay_clock,
                    general: GeneralId(i as u32),
                    value: true,
                });
            }
            if ones >= self.thresholds.accept && inst.accepted_at.is_none() {
                inst.accepted_at = Some(clock.round);
                events.push(AcceptEvent {
                    node: self.id,
                    general: GeneralId(i as u32),
                    round: clock.round,
                    phase: clock.phase,
                });
            }
        }
        Ok(events)
    }

    /// Removes and returns the sends planned for `clock`, ordered by General.
    pub fn take_outbox(&mut self, clock: RoundClock) -> Vec<Outgoing> {
        let (mut now, later): (Vec<_>, Vec<_>) = self.outbox.drain(..).partition(|o| o.clock == clock);
        debug_assert!(later.iter().all(|o| o.clock > clock), "stale outbox entry");
        self.outbox = later;
        now.sort();
        now
    }

    /// Peeks at the sends planned for `clock` without consuming them.
    pub fn planned(&self, clock: RoundClock) -> Vec<Outgoing> {
        let mut now: Vec<_> = self.outbox.iter().filter(|o| o.clock == clock).copied().collect();
        now.sort();
        now
    }

    /// Zeroes the estimate slots of the given opposite-side senders.
    pub fn clear_slots(&mut self, senders: &[NodeId]) {
        let other = self.partition.side(1 - self.side());
        for inst in &mut self.instances {
            for &s in senders {
                if other.contains(&s) {
                    inst.estimate[s - other.start] = false;
                }
            }
        }
    }
}
