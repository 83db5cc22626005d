use crate::agreement::{AgreeEvent, LeverNode};
use crate::broadcast::{
    AcceptEvent, BiNode, GeneralId, InstanceState, KnNode, Message, Outgoing, ProtocolViolation, RoundClock,
};
use crate::topology::NodeId;

/// One node of any supported protocol behind a single interface.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Machine {
    Kn(KnNode),
    Bi(BiNode),
    Lever(LeverNode),
}

impl Machine {
    pub fn id(&self) -> NodeId {
        match self {
            Machine::Kn(n) => n.id(),
            Machine::Bi(n) => n.id(),
            Machine::Lever(n) => n.id(),
        }
    }

    /// Protocol input. For the lever, `general` must be the nominal General.
    pub fn init(&mut self, general: GeneralId, value: bool) -> Result<(), ProtocolViolation> {
        match self {
            Machine::Kn(n) => n.init(general, value),
            Machine::Bi(n) => n.init(general, value),
            Machine::Lever(n) => {
                if general != n.params().g0 {
                    return Err(ProtocolViolation::UnknownGeneral(general));
                }
                n.initiate(value)
            }
        }
    }

    pub fn deliver(&mut self, clock: RoundClock, inbox: &[Message]) -> Result<Vec<AcceptEvent>, ProtocolViolation> {
        match self {
            Machine::Kn(n) => n.deliver(clock, inbox),
            Machine::Bi(n) => n.deliver(clock, inbox),
            Machine::Lever(n) => n.deliver(clock, inbox),
        }
    }

    pub fn end_of_round(&mut self, round: u32) -> Option<AgreeEvent> {
        match self {
            Machine::Lever(n) => n.end_of_round(round),
            _ => None,
        }
    }

    pub fn take_outbox(&mut self, clock: RoundClock) -> Vec<Outgoing> {
        match self {
            Machine::Kn(n) => n.take_outbox(clock),
            Machine::Bi(n) => n.take_outbox(clock),
            Machine::Lever(n) => n.take_outbox(clock),
        }
    }

    pub fn planned(&self, clock: RoundClock) -> Vec<Outgoing> {
        match self {
            Machine::Kn(n) => n.planned(clock),
            Machine::Bi(n) => n.planned(clock),
            Machine::Lever(n) => n.planned(clock),
        }
    }

    pub fn clear_slots(&mut self, senders: &[NodeId]) {
        match self {
            Machine::Kn(n) => n.clear_slots(senders),
            Machine::Bi(n) => n.clear_slots(senders),
            Machine::Lever(n) => n.clear_slots(senders),
        }
    }

    pub fn instances(&self) -> &[InstanceState] {
        match self {
            Machine::Kn(n) => n.instances(),
            Machine::Bi(n) => n.instances(),
            Machine::Lever(n) => n.broadcast().instances(),
        }
    }

    pub fn x(&self) -> Vec<bool> {
        self.instances().iter().map(|i| i.x).collect()
    }

    pub fn accepted_at(&self) -> Vec<Option<u32>> {
        self.instances().iter().map(|i| i.accepted_at).collect()
    }

    /// Current agreement decision `s`, for lever nodes.
    pub fn decision(&self) -> Option<bool> {
        match self {
            Machine::Lever(n) => Some(n.decision()),
            _ => None,
        }
    }

    pub fn final_decision(&self) -> Option<bool> {
        match self {
            Machine::Lever(n) => n.final_decision(),
            _ => None,
        }
    }
}
