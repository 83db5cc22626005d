//! Agreement on top of the broadcast primitive: the decision blocks `G_s`
//! and `G_z`, the BA-lever protocol, and the general `k0`-scaled variant.

mod lever;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::broadcast::{BroadcastConfig, ConfigError, GeneralId, LengthMismatch};
use crate::topology::NodeId;

pub use lever::{LeverNode, LeverParams};

fn ones(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

/// Side-B decision rule: 1 iff the nominal General was accepted and more
/// than `k` B-Generals have been accepted by round `k`.
pub fn g_s_b(y0: bool, y_b: &[bool], k: u32) -> bool {
    y0 && ones(y_b) > k as usize
}

/// Side-A decision rule: 1 at `n_B - f_B` or more accepted B-Generals, 0 at
/// `f_B` or fewer, and 0 in between (any value is admissible there).
pub fn g_s_a(y_b: &[bool], n_b: usize, f_b: usize) -> Result<bool, LengthMismatch> {
    if y_b.len() != n_b {
        return Err(LengthMismatch {
            expected: n_b,
            got: y_b.len(),
        });
    }
    Ok(ones(y_b) >= n_b.saturating_sub(f_b))
}

/// Final-decision block: releases `s` exactly at round `k_f`.
pub fn g_z(s: bool, k: u32, k_f: u32) -> Option<bool> {
    (k == k_f).then_some(s)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("decision at round {k} needs the accept vector of round {needed}, history has {available} rounds")]
pub struct MissingHistory {
    pub k: u32,
    pub needed: i64,
    pub available: usize,
}

/// General decision rule: 1 iff `y0(k) = 1` and `k0 * ||y(k - k0)|| >= k - k0`.
/// `history[t]` is the accept vector at the end of round `t`.
pub fn g_s_general(y0: bool, history: &[Vec<bool>], k: u32, k0: u32) -> Result<bool, MissingHistory> {
    let shifted = i64::from(k) - i64::from(k0);
    if shifted < 0 || shifted as usize >= history.len() {
        return Err(MissingHistory {
            k,
            needed: shifted,
            available: history.len(),
        });
    }
    let count = ones(&history[shifted as usize]) as i64;
    Ok(y0 && i64::from(k0) * count >= shifted)
}

/// `s(k)` is all ones, all zeros, or more than `k` nodes have visibly
/// deviated by round `k`.
pub fn invariant_i(s: &[bool], faulty_so_far: usize, k: u32) -> bool {
    s.iter().all(|&b| b) || s.iter().all(|&b| !b) || faulty_so_far > k as usize
}

/// How side-A nodes turn accepted B-Generals into a current decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideARule {
    /// 1 as soon as more than `f_B` B-Generals are accepted.
    #[default]
    MoreThanFaulty,
    /// The banded rule of [`g_s_a`].
    Banded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgreementVariant {
    BipartiteLever,
    /// Agreement over a `(k_H, k_delta)` broadcast with poor-node factor `mu`
    /// and `f` faulty nodes.
    General {
        k_h: u32,
        k_delta: u32,
        mu: Ratio<u64>,
        f: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub f_a: usize,
    pub f_b: usize,
    pub variant: AgreementVariant,
}

impl AgreementConfig {
    pub fn lever(n_a: usize, n_b: usize, f_a: usize, f_b: usize) -> Self {
        Self {
            n_a,
            n_b,
            f_a,
            f_b,
            variant: AgreementVariant::BipartiteLever,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        BroadcastConfig::Bipartite {
            n_a: self.n_a,
            n_b: self.n_b,
            f_a: self.f_a,
            f_b: self.f_b,
        }
        .validate()?;
        if let AgreementVariant::General { k_h, k_delta, .. } = self.variant {
            if k_h.max(k_delta) == 0 {
                return Err(ConfigError::Invalid("k0 = max(k_H, k_delta) must be positive".into()));
            }
        }
        Ok(())
    }

    /// Termination round: `f_B + 1` for the lever, `k0 * ceil(mu*f + 1)` in
    /// general.
    pub fn k_f(&self) -> u32 {
        match self.variant {
            AgreementVariant::BipartiteLever => self.f_b as u32 + 1,
            AgreementVariant::General { k_h, k_delta, mu, f } => {
                let k0 = k_h.max(k_delta);
                let steps = (mu * Ratio::from_integer(f) + Ratio::from_integer(1))
                    .ceil()
                    .to_integer();
                k0 * steps as u32
            }
        }
    }

    pub fn k0(&self) -> u32 {
        match self.variant {
            AgreementVariant::BipartiteLever => 1,
            AgreementVariant::General { k_h, k_delta, .. } => k_h.max(k_delta),
        }
    }

    /// Synchronous rounds on the wire: rounds `0..=k_f` plus the half round
    /// that carries the final report back to side A.
    pub fn wall_rounds(&self) -> u32 {
        self.k_f() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgreeEvent {
    pub node: NodeId,
    pub general: GeneralId,
    pub value: bool,
    pub round: u32,
}
