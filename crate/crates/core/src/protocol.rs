//! Complete pairwise interactions for the three protocol variants.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{
    boost_value, ceil_log2, first_zero_from, propagate_max_est, propagate_signals,
    sample_geometric, AgentState, Coin, Phase, DEFAULT_TIMER_MULTIPLIER,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "dynamic")]
    DynamicCounting,
    #[serde(rename = "dynamic-compressed")]
    DynamicCountingCompressed,
    #[serde(rename = "max-epidemic")]
    MaxEpidemic,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::DynamicCounting => "dynamic",
            Variant::DynamicCountingCompressed => "dynamic-compressed",
            Variant::MaxEpidemic => "max-epidemic",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(Variant::DynamicCounting),
            "dynamic-compressed" => Ok(Variant::DynamicCountingCompressed),
            "max-epidemic" => Ok(Variant::MaxEpidemic),
            other => Err(Error::invalid("protocol", format!("unknown protocol {other:?}"))),
        }
    }
}

/// A protocol variant together with its timer multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProtocolKind {
    pub variant: Variant,
    pub timer_multiplier: u32,
}

impl ProtocolKind {
    pub fn new(variant: Variant) -> Self {
        ProtocolKind { variant, timer_multiplier: DEFAULT_TIMER_MULTIPLIER }
    }

    pub fn with_timer_multiplier(variant: Variant, timer_multiplier: u32) -> Result<Self> {
        if timer_multiplier == 0 {
            return Err(Error::invalid("timer_multiplier", "must be at least 1"));
        }
        Ok(ProtocolKind { variant, timer_multiplier })
    }

    pub fn dynamic() -> Self {
        Self::new(Variant::DynamicCounting)
    }

    pub fn compressed() -> Self {
        Self::new(Variant::DynamicCountingCompressed)
    }

    pub fn max_epidemic() -> Self {
        Self::new(Variant::MaxEpidemic)
    }

    /// Phase timer limit for an agent with the given cached FMV.
    pub fn timer_limit(&self, fmv: u32) -> u64 {
        let base = match self.variant {
            Variant::DynamicCountingCompressed => 1u64.checked_shl(fmv).unwrap_or(u64::MAX),
            _ => u64::from(fmv),
        };
        base.saturating_mul(u64::from(self.timer_multiplier))
    }
}

/// Which side of an interaction a random draw belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    U,
    V,
}

impl Side {
    pub fn swap(self) -> Side {
        match self {
            Side::U => Side::V,
            Side::V => Side::U,
        }
    }
}

/// Source of the random choices consumed by one interaction.
pub trait Draws {
    fn coin(&mut self, side: Side) -> Coin;
    fn geometric(&mut self, side: Side) -> u32;
}

/// [`Draws`] backed by a random number generator.
pub struct RngDraws<'a, R: ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> Draws for RngDraws<'_, R> {
    fn coin(&mut self, _side: Side) -> Coin {
        Coin::flip(self.0)
    }

    fn geometric(&mut self, _side: Side) -> u32 {
        sample_geometric(self.0)
    }
}

/// The state every agent starts in, and the state of every agent the
/// adversary adds.
pub fn initial_state<R: Rng + ?Sized>(kind: ProtocolKind, rng: &mut R) -> AgentState {
    match kind.variant {
        Variant::MaxEpidemic => {
            let g = sample_geometric(rng);
            AgentState { grv: g, estimate: g, ..AgentState::default() }
        }
        _ => AgentState::default(),
    }
}

pub fn interact<R: Rng + ?Sized>(kind: ProtocolKind, u: &mut AgentState, v: &mut AgentState, rng: &mut R) {
    interact_with(kind, u, v, &mut RngDraws(rng));
}

/// One interaction between `u` and `v`, with every random choice taken from
/// `draws`.
pub fn interact_with<D: Draws + ?Sized>(kind: ProtocolKind, u: &mut AgentState, v: &mut AgentState, draws: &mut D) {
    match kind.variant {
        Variant::MaxEpidemic => {
            let m = u.grv.max(v.grv);
            for agent in [u, v] {
                agent.grv = m;
                agent.estimate = m;
            }
        }
        Variant::DynamicCounting => {
            u.update_group(draws.coin(Side::U));
            v.update_group(draws.coin(Side::V));
            u.boost();
            v.boost();
            propagate_signals(u, v);
            for (agent, side) in [(&mut *u, Side::U), (&mut *v, Side::V)] {
                agent.update_mv();
                agent.size_checker();
                if agent.phase != Phase::Normal {
                    agent.timer_routine(kind.timer_limit(agent.fmv), || draws.geometric(side));
                }
            }
            finish(u, v);
        }
        Variant::DynamicCountingCompressed => {
            u.update_group(draws.coin(Side::U));
            v.update_group(draws.coin(Side::V));
            compressed_boost(u);
            compressed_boost(v);
            propagate_signals(u, v);
            for (agent, side) in [(&mut *u, Side::U), (&mut *v, Side::V)] {
                compressed_update_mv(agent);
                compressed_size_checker(agent);
                if agent.phase != Phase::Normal {
                    agent.timer_routine(kind.timer_limit(agent.fmv), || draws.geometric(side));
                }
            }
            finish(u, v);
        }
    }
}

fn finish(u: &mut AgentState, v: &mut AgentState) {
    propagate_max_est(u, v);
    for agent in [u, v] {
        if agent.phase == Phase::Normal {
            agent.estimate = agent.grv;
        }
    }
}

/// Signal bucket used by the compressed variant: `⌊log₂ group⌋ + 1`.
pub fn bucket_index(group: u32) -> u32 {
    debug_assert!(group >= 1);
    group.max(1).ilog2() + 1
}

/// Writes `3·group + 1` into the agent's bucket unless the bucket already
/// holds a stronger signal.
pub fn compressed_boost(state: &mut AgentState) {
    let bucket = bucket_index(state.group);
    let value = boost_value(state.group);
    if value > state.signal(bucket) {
        state.set_signal(bucket, value);
    }
}

/// First start index for the compressed search:
/// `max(1, ⌈log₂ max(1, ⌈log₂ estimate⌉)⌉)`.
pub fn compressed_search_start(estimate: u32) -> u32 {
    ceil_log2(ceil_log2(estimate).max(1)).max(1)
}

/// Stores LFMV in the agent's `fmv` field: the 0-based bucket number
/// `⌊log₂ g⌋` of the first empty bucket (clamped to at least 1), so that
/// `2^LFMV` is the smallest group value mapped to that bucket.
pub fn compressed_update_mv(state: &mut AgentState) {
    let bucket = first_zero_from(&state.signals, compressed_search_start(state.estimate));
    state.fmv = (bucket - 1).max(1);
}

/// Enters Waiting when `estimate < 2^fmv / 4` or `estimate > 5·2^fmv`.
pub fn compressed_size_checker(state: &mut AgentState) {
    if state.phase != Phase::Normal {
        return;
    }
    let estimate = u128::from(state.estimate);
    let scale = 1u128.checked_shl(state.fmv).unwrap_or(u128::MAX);
    if 4 * estimate < scale || estimate > scale.saturating_mul(5) {
        state.phase = Phase::Waiting;
        state.timer = 1;
    }
}
