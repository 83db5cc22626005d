use std::collections::BTreeSet;

use super::{
    AcceptEvent, GeneralId, InstanceState, Message, Outgoing, Phase, ProtocolViolation, RoundClock, Thresholds,
};
use crate::topology::NodeId;

/// A node of the relay broadcast on `K_n`. Rounds have a single exchange
/// (phase one); the estimate covers all `n` nodes and the node's own slot is
/// its current state `x(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KnNode {
    id: NodeId,
    n: usize,
    thresholds: Thresholds,
    instances: Vec<InstanceState>,
    initialized: Vec<bool>,
    outbox: Vec<Outgoing>,
    started: bool,
}

impl KnNode {
    pub fn new(id: NodeId, n: usize, thresholds: Thresholds, generals: usize) -> Self {
        Self {
            id,
            n,
            thresholds,
            instances: vec![
                InstanceState {
                    x: false,
                    relayed: false,
                    estimate: vec![false; n],
                    accepted_at: None
                };
                generals
            ],
            initialized: vec![false; generals],
            outbox: Vec::new(),
            started: false,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn instance(&self, general: GeneralId) -> Option<&InstanceState> {
        self.instances.get(general.index())
    }

    pub fn instances(&self) -> &[InstanceState] {
        &self.instances
    }

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
            clock: RoundClock::START,
            general,
            value,
        });
        Ok(())
    }

    /// Folds round `k`'s messages into the estimates, accepts on `X(k)` and
    /// latches `x(k+1)`; a fresh excitation is sent in round `k+1`.
    pub fn deliver(&mut self, clock: RoundClock, inbox: &[Message]) -> Result<Vec<AcceptEvent>, ProtocolViolation> {
        self.started = true;
        let mut seen = BTreeSet::new();
        for msg in inbox {
            if msg.receiver != self.id {
                return Err(ProtocolViolation::WrongReceiver {
                    addressed: msg.receiver,
                    receiver: self.id,
                });
            }
            if msg.sender >= self.n || msg.sender == self.id {
                return Err(ProtocolViolation::NotNeighbor {
                    sender: msg.sender,
                    receiver: self.id,
                });
            }
            if msg.phase != Phase::AToB {
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
            let inst = self
                .instances
                .get_mut(msg.general.index())
                .ok_or(ProtocolViolation::UnknownGeneral(msg.general))?;
            inst.estimate[msg.sender] = msg.value;
            seen.insert(msg.general);
        }

        let mut events = Vec::new();
        for (i, inst) in self.instances.iter_mut().enumerate() {
            inst.estimate[self.id] = inst.x;
            let ones = inst.ones();
            if ones >= self.thresholds.accept && inst.accepted_at.is_none() {
                inst.accepted_at = Some(clock.round);
                events.push(AcceptEvent {
                    node: self.id,
                    general: GeneralId(i as u32),
                    round: clock.round,
                    phase: clock.phase,
                });
            }
            if ones >= self.thresholds.relay {
                inst.x = true;
            }
            if inst.x && !inst.relayed {
                inst.relayed = true;
                self.outbox.push(Outgoing {
                    clock: RoundClock::new(clock.round + 1, Phase::AToB),
                    general: GeneralId(i as u32),
                    value: true,
                });
            }
        }
        Ok(events)
    }

    pub fn take_outbox(&mut self, clock: RoundClock) -> Vec<Outgoing> {
        let (mut now, later): (Vec<_>, Vec<_>) = self.outbox.drain(..).partition(|o| o.clock == clock);
        self.outbox = later;
        now.sort();
        now
    }

    pub fn planned(&self, clock: RoundClock) -> Vec<Outgoing> {
        let mut now: Vec<_> = self.outbox.iter().filter(|o| o.clock == clock).copied().collect();
        now.sort();
        now
    }

    pub fn clear_slots(&mut self, senders: &[NodeId]) {
        for inst in &mut self.instances {
            for &s in senders {
                if s < self.n && s != self.id {
                    inst.estimate[s] = false;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: GeneralId = GeneralId(0);

    fn msg(round: u32, sender: NodeId, receiver: NodeId, value: bool) -> Message {
        Message {
            round,
            phase: Phase::AToB,
            sender,
            receiver,
            general: G,
            value,
        }
    }

    #[test]
    fn own_state_counts_toward_accept() {
        let mut node = KnNode::new(0, 4, Thresholds::new(4, 1), 1);
        node.init(G, true).unwrap();
        let ev = node
            .deliver(RoundClock::START, &[msg(0, 1, 0, true), msg(0, 2, 0, true)])
            .unwrap();
        assert_eq!(ev.len(), 1);
    }

    #[test]
    fn relay_goes_out_next_round() {
        let mut node = KnNode::new(3, 4, Thresholds::new(4, 1), 1);
        node.init(G, false).unwrap();
        assert_eq!(node.take_outbox(RoundClock::START).len(), 1);
        let ev = node
            .deliver(RoundClock::START, &[msg(0, 0, 3, true), msg(0, 1, 3, true)])
            .unwrap();
        assert!(ev.is_empty());
        assert!(node.instance(G).unwrap().x);
        let out = node.take_outbox(RoundClock::new(1, Phase::AToB));
        assert_eq!(out.len(), 1);
        assert!(out[0].value);
        // own relay counts the following round
        let ev = node.deliver(RoundClock::new(1, Phase::AToB), &[]).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].round, 1);
    }

    #[test]
    fn single_one_is_inert() {
        let mut node = KnNode::new(3, 4, Thresholds::new(4, 1), 1);
        node.deliver(RoundClock::START, &[msg(0, 0, 3, true)]).unwrap();
        assert!(!node.instance(G).unwrap().x);
        assert!(node.take_outbox(RoundClock::new(1, Phase::AToB)).is_empty());
    }

    #[test]
    fn rejects_self_message() {
        let mut node = KnNode::new(1, 4, Thresholds::new(4, 1), 1);
        assert!(node.deliver(RoundClock::START, &[msg(0, 1, 1, true)]).is_err());
    }
}
