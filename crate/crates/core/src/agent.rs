//! Agent memory and the per-agent sub-protocol updates.
//!
//! Every update operates in place on an [`AgentState`]. Signal arrays use
//! 1-indexed semantics in the public API (`signal(i)` / `signals()[i - 1]`),
//! and any index beyond the stored array reads as strength 0.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Default multiplier applied to the agent's FMV to obtain the Waiting and
/// Updating phase lengths.
pub const DEFAULT_TIMER_MULTIPLIER: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Normal,
    Waiting,
    Updating,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Normal, Phase::Waiting, Phase::Updating];

    pub fn index(self) -> usize {
        match self {
            Phase::Normal => 0,
            Phase::Waiting => 1,
            Phase::Updating => 2,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Normal => "normal",
            Phase::Waiting => "waiting",
            Phase::Updating => "updating",
        })
    }
}

/// Outcome of the fair coin used by the group random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coin {
    Increment,
    Reset,
}

impl Coin {
    pub fn flip<R: Rng + ?Sized>(rng: &mut R) -> Coin {
        if rng.random::<bool>() {
            Coin::Increment
        } else {
            Coin::Reset
        }
    }
}

/// The full memory of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentState {
    pub group: u32,
    /// `signals[i - 1]` holds the remaining strength of the signal for index `i`.
    pub signals: Vec<u32>,
    pub estimate: u32,
    pub grv: u32,
    pub timer: u32,
    pub phase: Phase,
    pub fmv: u32,
}

impl Default for AgentState {
    fn default() -> Self {
        AgentState {
            group: 1,
            signals: Vec::new(),
            estimate: 1,
            grv: 1,
            timer: 0,
            phase: Phase::Normal,
            fmv: 1,
        }
    }
}

/// `⌈log₂ x⌉` for `x ≥ 1`; returns 0 for `x ≤ 1`.
pub fn ceil_log2(x: u32) -> u32 {
    if x <= 1 {
        0
    } else {
        u32::BITS - (x - 1).leading_zeros()
    }
}

/// Maximum strength written when an agent boosts the signal for `group`.
pub fn boost_value(group: u32) -> u32 {
    group.saturating_mul(3).saturating_add(1)
}

/// First index `i ≥ start` (1-indexed) with a zero signal; indices past the
/// stored array count as zero.
pub(crate) fn first_zero_from(signals: &[u32], start: u32) -> u32 {
    let start = start.max(1);
    let from = (start - 1) as usize;
    if from >= signals.len() {
        return start;
    }
    match signals[from..].iter().position(|&s| s == 0) {
        Some(offset) => start + offset as u32,
        None => signals.len() as u32 + 1,
    }
}

impl AgentState {
    /// Signal strength at 1-indexed position `index` (0 when not stored).
    pub fn signal(&self, index: u32) -> u32 {
        match index.checked_sub(1) {
            Some(i) => self.signals.get(i as usize).copied().unwrap_or(0),
            None => 0,
        }
    }

    /// Write `value` at 1-indexed position `index`, zero-filling any gap.
    pub(crate) fn set_signal(&mut self, index: u32, value: u32) {
        debug_assert!(index >= 1);
        let i = (index - 1) as usize;
        if i >= self.signals.len() {
            self.signals.resize(i + 1, 0);
        }
        self.signals[i] = value;
    }

    /// Largest value held in any integer field, including every signal.
    pub fn max_stored_integer(&self) -> u32 {
        let scalars = self
            .group
            .max(self.estimate)
            .max(self.grv)
            .max(self.timer)
            .max(self.fmv);
        self.signals.iter().copied().fold(scalars, u32::max)
    }

    pub fn update_group(&mut self, coin: Coin) {
        self.group = match coin {
            Coin::Increment => self.group.saturating_add(1),
            Coin::Reset => 1,
        };
    }

    /// Sets the signal at the agent's own group to its maximum `3·group + 1`.
    pub fn boost(&mut self) {
        self.set_signal(self.group, boost_value(self.group));
    }

    /// Recomputes the cached first missing value, searching from
    /// `max(1, ⌈log₂ estimate⌉)`.
    pub fn update_mv(&mut self) {
        let start = ceil_log2(self.estimate).max(1);
        self.fmv = first_zero_from(&self.signals, start);
    }

    /// Enters the Waiting phase when FMV falls outside
    /// `[0.25·estimate, 2.5·estimate]`. The band is inclusive.
    pub fn size_checker(&mut self) {
        if self.phase != Phase::Normal {
            return;
        }
        let fmv = u64::from(self.fmv);
        let estimate = u64::from(self.estimate);
        if 4 * fmv < estimate || 2 * fmv > 5 * estimate {
            self.phase = Phase::Waiting;
            self.timer = 1;
        }
    }

    /// Advances the phase timer. Once it exceeds `limit`, a Waiting agent
    /// draws a fresh GRV and starts Updating, while an Updating agent adopts
    /// its GRV as the estimate and returns to Normal. At most one transition
    /// happens per call.
    ///
    /// `draw_grv` is only invoked on the Waiting → Updating edge.
    pub fn timer_routine(&mut self, limit: u64, draw_grv: impl FnOnce() -> u32) {
        self.timer = self.timer.saturating_add(1);
        if u64::from(self.timer) <= limit {
            return;
        }
        match self.phase {
            Phase::Waiting => {
                self.grv = draw_grv();
                self.phase = Phase::Updating;
                self.timer = 1;
            }
            Phase::Updating => {
                self.estimate = self.grv;
                self.phase = Phase::Normal;
                self.timer = 0;
            }
            Phase::Normal => {}
        }
    }
}

/// Both agents take `max(0, max(a, b) − 1)` at every index up to the longer
/// array; afterwards the two arrays have equal length.
pub fn propagate_signals(u: &mut AgentState, v: &mut AgentState) {
    let len = u.signals.len().max(v.signals.len());
    u.signals.resize(len, 0);
    v.signals.resize(len, 0);
    for (a, b) in u.signals.iter_mut().zip(v.signals.iter_mut()) {
        let m = (*a).max(*b).saturating_sub(1);
        *a = m;
        *b = m;
    }
}

/// Epidemic max of GRV between two agents sharing a non-Waiting phase.
pub fn propagate_max_est(u: &mut AgentState, v: &mut AgentState) {
    if u.phase == v.phase && u.phase != Phase::Waiting {
        let m = u.grv.max(v.grv);
        u.grv = m;
        v.grv = m;
    }
}

/// Number of fair flips up to and including the first heads, so that
/// `Pr[G = j] = 2^-j`.
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    let mut flips = 0u32;
    loop {
        let word = rng.next_u64();
        if word != 0 {
            return flips + word.trailing_zeros() + 1;
        }
        flips = flips.saturating_add(64);
    }
}
