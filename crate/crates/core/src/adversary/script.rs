use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AdversaryError, CorruptionSet};
use crate::broadcast::{GeneralId, Message, Phase, RoundClock};
use crate::topology::{NodeId, Topology};

/// Key of one override: `(round, phase, sender, receiver, general)`.
pub type SlotKey = (u32, Phase, NodeId, NodeId, GeneralId);

/// Per-receiver message overrides for corrupted senders. A slot without an
/// entry is an absent message, which receivers read as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Message>", from = "Vec<Message>")]
pub struct ExplicitScript {
    entries: BTreeMap<SlotKey, bool>,
}

impl From<ExplicitScript> for Vec<Message> {
    fn from(s: ExplicitScript) -> Self {
        s.messages().collect()
    }
}

impl From<Vec<Message>> for ExplicitScript {
    fn from(v: Vec<Message>) -> Self {
        let mut s = ExplicitScript::default();
        for m in v {
            s.set(m.clock(), m.sender, m.receiver, m.general, m.value);
        }
        s
    }
}

impl ExplicitScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, clock: RoundClock, sender: NodeId, receiver: NodeId, general: GeneralId, value: bool) {
        self.entries
            .insert((clock.round, clock.phase, sender, receiver, general), value);
    }

    pub fn get(&self, clock: RoundClock, sender: NodeId, receiver: NodeId, general: GeneralId) -> bool {
        self.entries
            .get(&(clock.round, clock.phase, sender, receiver, general))
            .copied()
            .unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn senders(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.keys().map(|k| k.2)
    }

    pub fn messages(&self) -> impl Iterator<Item = Message> + '_ {
        self.entries
            .iter()
            .map(|(&(round, phase, sender, receiver, general), &value)| Message {
                round,
                phase,
                sender,
                receiver,
                general,
                value,
            })
    }

    /// Rejects entries whose sender is not corrupted.
    pub fn validate(&self, corruption: &CorruptionSet) -> Result<(), AdversaryError> {
        match self.senders().find(|s| !corruption.contains(*s)) {
            Some(sender) => Err(AdversaryError::NotCorrupted(sender)),
            None => Ok(()),
        }
    }

    /// One line per override: `round phase sender receiver general value`,
    /// with phase 1 or 2 and value 0 or 1.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in self.messages() {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                m.round,
                m.phase.number(),
                m.sender,
                m.receiver,
                m.general.0,
                u8::from(m.value)
            );
        }
        out
    }

    /// Parses the line format of [`to_text`](Self::to_text). Blank lines and
    /// `#` comments are skipped; `-` is accepted as an explicit absent value.
    pub fn parse(text: &str) -> Result<Self, AdversaryError> {
        let mut script = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| AdversaryError::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let num = |i: usize, name: &str| -> Result<u64, AdversaryError> {
                fields[i]
                    .parse::<u64>()
                    .map_err(|_| err(format!("{name} `{}` is not a non-negative integer", fields[i])))
            };
            let round = num(0, "round")? as u32;
            let phase = Phase::from_number(num(1, "phase")? as u8)
                .ok_or_else(|| err(format!("phase `{}` must be 1 or 2", fields[1])))?;
            let sender = num(2, "sender")? as NodeId;
            let receiver = num(3, "receiver")? as NodeId;
            let general = GeneralId(num(4, "general")? as u32);
            let value = match fields[5] {
                "1" => true,
                "0" | "-" => false,
                other => return Err(err(format!("value `{other}` must be 0, 1 or -"))),
            };
            script.set(RoundClock::new(round, phase), sender, receiver, general, value);
        }
        Ok(script)
    }
}

/// One free bit of an enumerated script.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    clock: RoundClock,
    sender: NodeId,
    receiver: NodeId,
    general: GeneralId,
}

pub const DEFAULT_SCRIPT_CAP: u128 = 1 << 28;

/// Every delivery pattern of bits from the corrupted senders to each of their
/// neighbors, for each General and each phase of the first `horizon` rounds.
/// Script `i` sets slot `j` to bit `j` of `i`, so index ranges can be handed
/// to workers independently.
#[derive(Debug, Clone)]
pub struct ScriptSpace {
    slots: Vec<Slot>,
}

impl ScriptSpace {
    pub fn new(
        corruption: &CorruptionSet,
        topology: &Topology,
        generals: usize,
        horizon: u32,
        cap: u128,
    ) -> Result<Self, AdversaryError> {
        let mut slots = Vec::new();
        let phases: &[Phase] = if topology.partition().is_some() {
            &[Phase::AToB, Phase::BToA]
        } else {
            &[Phase::AToB]
        };
        for round in 0..horizon {
            for &phase in phases {
                let clock = RoundClock::new(round, phase);
                for sender in corruption.iter() {
                    if !sends_in(topology, sender, phase) {
                        continue;
                    }
                    for receiver in topology.neighbor_ids(sender) {
                        for g in 0..generals {
                            slots.push(Slot {
                                clock,
                                sender,
                                receiver,
                                general: GeneralId(g as u32),
                            });
                        }
                    }
                }
            }
        }
        let space = Self { slots };
        let count = space.count();
        if count.is_none_or(|c| c > cap) {
            return Err(AdversaryError::CapExceeded {
                bits: space.slots.len(),
                cap,
            });
        }
        Ok(space)
    }

    /// Number of free bits.
    pub fn bits(&self) -> usize {
        self.slots.len()
    }

    /// `2^bits`, or `None` beyond `u128`.
    pub fn count(&self) -> Option<u128> {
        1u128.checked_shl(self.slots.len() as u32)
    }

    pub fn script(&self, index: u128) -> ExplicitScript {
        let mut s = ExplicitScript::new();
        for (j, slot) in self.slots.iter().enumerate() {
            if (index >> j) & 1 == 1 {
                s.set(slot.clock, slot.sender, slot.receiver, slot.general, true);
            }
        }
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = ExplicitScript> + '_ {
        (0..self.count().unwrap_or(0)).map(|i| self.script(i))
    }
}

/// Whether `node` sends in `phase`: side A in phase one, side B in phase two;
/// on a topology without sides everyone sends in phase one.
pub fn sends_in(topology: &Topology, node: NodeId, phase: Phase) -> bool {
    match topology.partition() {
        Some(p) => (p.side_of(node) == 0) == (phase == Phase::AToB),
        None => phase == Phase::AToB,
    }
}

/// Streams explicit scripts for the given corruption set; see [`ScriptSpace`].
pub fn enumerate_scripts(
    corruption: &CorruptionSet,
    topology: &Topology,
    generals: usize,
    horizon: u32,
    cap: u128,
) -> Result<ScriptSpace, AdversaryError> {
    ScriptSpace::new(corruption, topology, generals, horizon, cap)
}
