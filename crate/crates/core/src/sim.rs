//! Random pairwise scheduler, adversary events and the snapshot-producing
//! run loop.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, Phase};
use crate::error::{Error, Result};
use crate::metrics::{snapshot, Snapshot};
use crate::protocol::{compressed_update_mv, initial_state, interact, ProtocolKind, Variant};

/// The generator used for every run. Seeded per run, never shared.
pub type SimRng = ChaCha8Rng;

/// Absorbs floating point noise when comparing a population clock against
/// event and snapshot targets.
pub(crate) const TIME_EPS: f64 = 1e-9;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    agents: Vec<AgentState>,
    interactions: u64,
    // Time is kept as `epoch_time + (interactions - epoch_interactions) / n`
    // so that it stays exact between size changes.
    epoch_time: f64,
    epoch_interactions: u64,
}

impl Population {
    pub fn new(agents: Vec<AgentState>) -> Self {
        Population { agents, interactions: 0, epoch_time: 0.0, epoch_interactions: 0 }
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Mutable access for tests and tools that construct special
    /// configurations directly.
    pub fn agents_mut(&mut self) -> &mut [AgentState] {
        &mut self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn interactions(&self) -> u64 {
        self.interactions
    }

    /// Accumulated parallel time.
    pub fn time(&self) -> f64 {
        let since = self.interactions - self.epoch_interactions;
        if since == 0 {
            self.epoch_time
        } else {
            self.epoch_time + since as f64 / self.agents.len() as f64
        }
    }

    pub fn groups(&self) -> impl Iterator<Item = u32> + '_ {
        self.agents.iter().map(|a| a.group)
    }

    fn rebase_clock(&mut self) {
        self.epoch_time = self.time();
        self.epoch_interactions = self.interactions;
    }

    /// Two distinct mutable agents.
    fn pair_mut(&mut self, i: usize, j: usize) -> (&mut AgentState, &mut AgentState) {
        debug_assert_ne!(i, j);
        if i < j {
            let (lo, hi) = self.agents.split_at_mut(j);
            (&mut lo[i], &mut hi[0])
        } else {
            let (lo, hi) = self.agents.split_at_mut(i);
            (&mut hi[0], &mut lo[j])
        }
    }
}

/// Uniform unordered pair `{i, j}` with `i ≠ j` out of `n ≥ 2` agents.
pub fn choose_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    Add(u64),
    RemoveRandom(u64),
    RemoveTo(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryEvent {
    pub at: f64,
    pub action: EventAction,
}

impl AdversaryEvent {
    pub fn new(at: f64, action: EventAction) -> Self {
        AdversaryEvent { at, action }
    }

    /// Size after applying this event to a population of `size` agents.
    pub fn resulting_size(&self, index: usize, size: usize) -> Result<usize> {
        let underflow = |reason: String| Error::SizeUnderflow { index, at: self.at, reason };
        let new_size = match self.action {
            EventAction::Add(k) => {
                if k == 0 {
                    return Err(Error::invalid(format!("events[{index}].action.add"), "count must be positive"));
                }
                size.checked_add(k as usize).ok_or_else(|| underflow("size overflow".into()))?
            }
            EventAction::RemoveRandom(k) => {
                if k == 0 {
                    return Err(Error::invalid(
                        format!("events[{index}].action.remove_random"),
                        "count must be positive",
                    ));
                }
                let k = usize::try_from(k).unwrap_or(usize::MAX);
                size.checked_sub(k)
                    .ok_or_else(|| underflow(format!("cannot remove {k} of {size} agents")))?
            }
            EventAction::RemoveTo(t) => {
                let t = usize::try_from(t).unwrap_or(usize::MAX);
                if t > size {
                    return Err(underflow(format!("remove_to {t} exceeds current size {size}")));
                }
                t
            }
        };
        if new_size < 2 {
            return Err(underflow(format!("would leave {new_size} agents (minimum 2)")));
        }
        Ok(new_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarialBounds {
    pub max_group: u32,
    pub max_estimate: u32,
    pub max_signal_index: u32,
}

impl Default for AdversarialBounds {
    fn default() -> Self {
        AdversarialBounds { max_group: 30, max_estimate: 60, max_signal_index: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitSpec {
    /// Every agent in the protocol's initial state.
    Default { size: usize },
    /// Independently randomized agents, for the loosely-stabilizing mode.
    AdversarialRandom { size: usize, bounds: AdversarialBounds },
}

impl InitSpec {
    pub fn size(&self) -> usize {
        match *self {
            InitSpec::Default { size } | InitSpec::AdversarialRandom { size, .. } => size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size() < 2 {
            return Err(Error::invalid("init.size", format!("{} < 2", self.size())));
        }
        if let InitSpec::AdversarialRandom { bounds, .. } = self {
            for (name, v) in [
                ("init.max_group", bounds.max_group),
                ("init.max_estimate", bounds.max_estimate),
                ("init.max_signal_index", bounds.max_signal_index),
            ] {
                if v < 1 {
                    return Err(Error::invalid(name, "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

/// One randomized agent drawn within `bounds`.
pub fn adversarial_agent<R: Rng + ?Sized>(bounds: &AdversarialBounds, kind: ProtocolKind, rng: &mut R) -> AgentState {
    let group = rng.random_range(1..=bounds.max_group);
    let estimate = rng.random_range(1..=bounds.max_estimate);
    let signals = (1..=bounds.max_signal_index)
        .map(|i| rng.random_range(0..=3 * i + 1))
        .collect();
    let phase = Phase::ALL[rng.random_range(0..3)];
    // GRV keeps its initial value: a randomized GRV would be copied into the
    // estimate of every Normal agent and could pin the population anywhere
    // inside the detection band.
    let mut agent = AgentState { group, signals, estimate, grv: 1, timer: 0, phase, fmv: 1 };
    match kind.variant {
        Variant::DynamicCountingCompressed => compressed_update_mv(&mut agent),
        _ => agent.update_mv(),
    }
    agent
}

pub fn build_initial<R: Rng + ?Sized>(init: &InitSpec, kind: ProtocolKind, rng: &mut R) -> Result<Population> {
    init.validate()?;
    let agents = match init {
        InitSpec::Default { size } => (0..*size).map(|_| initial_state(kind, rng)).collect(),
        InitSpec::AdversarialRandom { size, bounds } => {
            (0..*size).map(|_| adversarial_agent(bounds, kind, rng)).collect()
        }
    };
    Ok(Population::new(agents))
}

/// One uniformly random interaction.
pub fn step<R: Rng + ?Sized>(pop: &mut Population, kind: ProtocolKind, rng: &mut R) -> Result<()> {
    let n = pop.len();
    if n < 2 {
        return Err(Error::PopulationTooSmall(n));
    }
    let (i, j) = choose_pair(n, rng);
    let (u, v) = pop.pair_mut(i, j);
    interact(kind, u, v, rng);
    pop.interactions += 1;
    Ok(())
}

/// Applies an adversary event. Interactions and time are left untouched.
pub fn apply_event<R: Rng + ?Sized>(
    pop: &mut Population,
    event: &AdversaryEvent,
    index: usize,
    kind: ProtocolKind,
    rng: &mut R,
) -> Result<()> {
    let size = pop.len();
    let new_size = event.resulting_size(index, size)?;
    pop.rebase_clock();
    match event.action {
        EventAction::Add(k) => {
            pop.agents.extend((0..k).map(|_| initial_state(kind, rng)));
        }
        EventAction::RemoveRandom(_) | EventAction::RemoveTo(_) => {
            let removed = size - new_size;
            let mut doomed = index::sample(rng, size, removed).into_vec();
            doomed.sort_unstable();
            let mut doomed = doomed.into_iter().peekable();
            let mut position = 0;
            pop.agents.retain(|_| {
                let drop = doomed.next_if_eq(&position).is_some();
                position += 1;
                !drop
            });
        }
    }
    debug_assert_eq!(pop.len(), new_size);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub protocol: ProtocolKind,
    pub init: InitSpec,
    pub events: Vec<AdversaryEvent>,
    pub max_time: f64,
    pub snapshot_every: f64,
}

impl Scenario {
    /// Checks every invariant, including that no event drops the population
    /// below two agents.
    pub fn validate(&self) -> Result<()> {
        if self.protocol.timer_multiplier == 0 {
            return Err(Error::invalid("timer_multiplier", "must be at least 1"));
        }
        self.init.validate()?;
        if !(self.max_time.is_finite() && self.max_time > 0.0) {
            return Err(Error::invalid("max_time", "must be a positive finite number"));
        }
        if !(self.snapshot_every.is_finite() && self.snapshot_every > 0.0) {
            return Err(Error::invalid("snapshot_every", "must be a positive finite number"));
        }
        let mut previous = 0.0;
        let mut size = self.init.size();
        for (i, ev) in self.events.iter().enumerate() {
            if !(ev.at.is_finite() && ev.at >= 0.0) {
                return Err(Error::invalid(format!("events[{i}].at"), "must be a non-negative finite number"));
            }
            if ev.at < previous {
                return Err(Error::invalid(format!("events[{i}].at"), "events must be sorted by time"));
            }
            if ev.at > self.max_time {
                return Err(Error::invalid(format!("events[{i}].at"), "event after max_time"));
            }
            previous = ev.at;
            size = ev.resulting_size(i, size)?;
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        Scenario { seed, ..self.clone() }
    }

    /// Runs to completion and returns the snapshot stream.
    pub fn run(&self) -> Result<Vec<Snapshot>> {
        let mut snaps = Vec::new();
        self.run_with(|_, snap| snaps.push(snap.clone()))?;
        Ok(snaps)
    }

    /// Runs to completion, handing the population and each snapshot to
    /// `observe` as it is taken.
    pub fn run_with<F>(&self, observe: F) -> Result<()>
    where
        F: FnMut(&Population, &Snapshot),
    {
        let mut sim = Simulation::new(self)?;
        sim.run_to_end(observe)
    }
}

/// A scenario in progress.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    population: Population,
    rng: SimRng,
    next_event: usize,
    next_snapshot: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let mut rng = rng_from_seed(scenario.seed);
        let population = build_initial(&scenario.init, scenario.protocol, &mut rng)?;
        Ok(Simulation { scenario, population, rng, next_event: 0, next_snapshot: 0 })
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    fn snapshot_target(&self) -> f64 {
        self.next_snapshot as f64 * self.scenario.snapshot_every
    }

    /// Fires due events and takes a due snapshot at the current step
    /// boundary. Returns the snapshot if one was taken.
    fn boundary(&mut self) -> Result<Option<Snapshot>> {
        let now = self.population.time();
        while let Some(ev) = self.scenario.events.get(self.next_event) {
            if now + TIME_EPS < ev.at {
                break;
            }
            apply_event(&mut self.population, ev, self.next_event, self.scenario.protocol, &mut self.rng)?;
            self.next_event += 1;
        }
        let target = self.snapshot_target();
        if now + TIME_EPS >= target && target <= self.scenario.max_time + TIME_EPS {
            // Skip targets that fell inside a single step (possible only when
            // snapshot_every < 1/n).
            while self.snapshot_target() <= now + TIME_EPS {
                self.next_snapshot += 1;
            }
            return Ok(Some(snapshot(&self.population)));
        }
        Ok(None)
    }

    pub fn run_to_end<F>(&mut self, mut observe: F) -> Result<()>
    where
        F: FnMut(&Population, &Snapshot),
    {
        let kind = self.scenario.protocol;
        loop {
            if let Some(snap) = self.boundary()? {
                observe(&self.population, &snap);
            }
            if self.population.time() + TIME_EPS >= self.scenario.max_time {
                return Ok(());
            }
            step(&mut self.population, kind, &mut self.rng)?;
        }
    }
}
