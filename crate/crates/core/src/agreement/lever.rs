use serde::{Deserialize, Serialize};

use super::{g_s_a, g_s_b, g_z, AgreeEvent, AgreementConfig, SideARule};
use crate::broadcast::{AcceptEvent, BiNode, GeneralId, Message, Outgoing, ProtocolViolation, RoundClock, Thresholds};
use crate::topology::{NodeId, Partition};

/// Everything a lever node needs besides its identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LeverParams {
    pub n_a: usize,
    pub n_b: usize,
    pub f_a: usize,
    pub f_b: usize,
    /// Nominal General: the broadcast instance carrying the side-A inputs.
    pub g0: GeneralId,
    pub side_a_rule: SideARule,
    /// Shift applied to every accept threshold. Zero except in mutation tests.
    pub accept_offset: i64,
}

impl LeverParams {
    pub fn new(config: &AgreementConfig, g0: GeneralId) -> Self {
        Self {
            n_a: config.n_a,
            n_b: config.n_b,
            f_a: config.f_a,
            f_b: config.f_b,
            g0,
            side_a_rule: SideARule::default(),
            accept_offset: 0,
        }
    }

    pub fn k_f(&self) -> u32 {
        self.f_b as u32 + 1
    }

    pub fn partition(&self) -> Partition {
        Partition {
            n_a: self.n_a,
            n_b: self.n_b,
        }
    }
}

/// A BA-lever node: `n_B` parallel broadcast instances (one per side-B node,
/// instance `g0` doubling as the top-rank broadcast of the side-A inputs)
/// plus the decision state.
///
/// Side B initiates its own instance once more than `f_A` side-A inputs of 1
/// arrive in round 0, and again (at most once overall) when its decision
/// flips to 1. Side-A nodes treat the General's own message on its instance
/// as their broadcast input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LeverNode {
    params: LeverParams,
    bcast: BiNode,
    s: bool,
    z: Option<bool>,
    y_b: Vec<bool>,
    initiated: bool,
}

impl LeverNode {
    pub fn new(id: NodeId, params: LeverParams) -> Self {
        let partition = params.partition();
        let thresholds = if partition.side_of(id) == 0 {
            Thresholds::new(params.n_b, params.f_b)
        } else {
            Thresholds::new(params.n_a, params.f_a)
        }
        .with_accept_offset(params.accept_offset);
        let mut bcast = BiNode::new(id, partition, thresholds, params.n_b);
        if partition.side_of(id) == 0 {
            for h in 0..params.n_b {
                if h != params.g0.index() {
                    bcast.set_originator(GeneralId(h as u32), params.n_a + h);
                }
            }
        }
        Self {
            params,
            bcast,
            s: false,
            z: None,
            y_b: vec![false; params.n_b],
            initiated: false,
        }
    }

    pub fn id(&self) -> NodeId {
        self.bcast.id()
    }

    pub fn side(&self) -> usize {
        self.bcast.side()
    }

    pub fn params(&self) -> &LeverParams {
        &self.params
    }

    pub fn broadcast(&self) -> &BiNode {
        &self.bcast
    }

    /// Current decision `s`.
    pub fn decision(&self) -> bool {
        self.s
    }

    /// Final decision `z`, set at the end of round `k_f`.
    pub fn final_decision(&self) -> Option<bool> {
        self.z
    }

    pub fn accepted(&self) -> &[bool] {
        &self.y_b
    }

    /// Side A: starts the agreement with input `v`, sent on instance `g0` in
    /// phase one of round 0. Side-B nodes start idle and need no call.
    pub fn initiate(&mut self, value: bool) -> Result<(), ProtocolViolation> {
        if self.initiated {
            return Err(ProtocolViolation::Reinit(self.id(), self.params.g0));
        }
        self.initiated = true;
        if self.side() == 0 {
            self.bcast.init(self.params.g0, value)?;
        }
        Ok(())
    }

    fn own_general(&self) -> GeneralId {
        GeneralId((self.id() - self.params.n_a) as u32)
    }

    pub fn deliver(&mut self, clock: RoundClock, inbox: &[Message]) -> Result<Vec<AcceptEvent>, ProtocolViolation> {
        let events = self.bcast.deliver(clock, inbox)?;
        if self.side() == 1 && clock == RoundClock::START {
            // r_A: side-A inputs of 1 on the nominal General, read only now
            let mut r_a = vec![false; self.params.n_a];
            for msg in inbox.iter().filter(|m| m.general == self.params.g0 && m.value) {
                r_a[msg.sender] = true;
            }
            if r_a.iter().filter(|&&b| b).count() > self.params.f_a {
                self.bcast.originate(self.own_general(), clock.round)?;
            }
        }
        for ev in &events {
            self.y_b[ev.general.index()] = true;
        }
        if !events.is_empty() {
            self.update_decision(clock)?;
        }
        Ok(events)
    }

    fn update_decision(&mut self, clock: RoundClock) -> Result<(), ProtocolViolation> {
        if self.side() == 0 {
            let next = match self.params.side_a_rule {
                SideARule::MoreThanFaulty => self.y_b.iter().filter(|&&b| b).count() > self.params.f_b,
                SideARule::Banded => {
                    g_s_a(&self.y_b, self.params.n_b, self.params.f_b).expect("accept vector sized n_B")
                }
            };
            self.s |= next;
        } else if !self.s && g_s_b(self.y_b[self.params.g0.index()], &self.y_b, clock.round) {
            self.s = true;
            self.bcast.originate(self.own_general(), clock.round)?;
        }
        Ok(())
    }

    /// Releases the final decision at the end of round `k_f`.
    pub fn end_of_round(&mut self, round: u32) -> Option<AgreeEvent> {
        let value = g_z(self.s, round, self.params.k_f())?;
        if self.z.is_some() {
            return None;
        }
        self.z = Some(value);
        Some(AgreeEvent {
            node: self.id(),
            general: self.params.g0,
            value,
            round,
        })
    }

    pub fn take_outbox(&mut self, clock: RoundClock) -> Vec<Outgoing> {
        self.bcast.take_outbox(clock)
    }

    pub fn planned(&self, clock: RoundClock) -> Vec<Outgoing> {
        self.bcast.planned(clock)
    }

    pub fn clear_slots(&mut self, senders: &[NodeId]) {
        self.bcast.clear_slots(senders);
    }
}
