//! JSON scenario files.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "protocol": "dynamic",
//!   "timer_multiplier": 12,
//!   "init": { "mode": "default", "size": 10000 },
//!   "events": [ { "at": 500.0, "action": { "remove_to": 500 } } ],
//!   "max_time": 1500.0,
//!   "snapshot_every": 1.0
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::DEFAULT_TIMER_MULTIPLIER;
use crate::error::{Error, Result};
use crate::protocol::{ProtocolKind, Variant};
use crate::sim::{AdversarialBounds, AdversaryEvent, InitSpec, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    #[serde(rename = "default")]
    Default,
    #[serde(rename = "adversarial-random")]
    AdversarialRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitFile {
    pub mode: InitMode,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_group: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_estimate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_signal_index: Option<u32>,
}

fn default_timer_multiplier() -> u32 {
    DEFAULT_TIMER_MULTIPLIER
}

/// On-disk form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub protocol: Variant,
    #[serde(default = "default_timer_multiplier")]
    pub timer_multiplier: u32,
    pub init: InitFile,
    pub events: Vec<AdversaryEvent>,
    pub max_time: f64,
    pub snapshot_every: f64,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let protocol = ProtocolKind::with_timer_multiplier(self.protocol, self.timer_multiplier)?;
        let init = match self.init.mode {
            InitMode::Default => {
                for (name, v) in [
                    ("init.max_group", self.init.max_group),
                    ("init.max_estimate", self.init.max_estimate),
                    ("init.max_signal_index", self.init.max_signal_index),
                ] {
                    if v.is_some() {
                        return Err(Error::invalid(name, "only allowed with mode \"adversarial-random\""));
                    }
                }
                InitSpec::Default { size: self.init.size }
            }
            InitMode::AdversarialRandom => {
                let d = AdversarialBounds::default();
                InitSpec::AdversarialRandom {
                    size: self.init.size,
                    bounds: AdversarialBounds {
                        max_group: self.init.max_group.unwrap_or(d.max_group),
                        max_estimate: self.init.max_estimate.unwrap_or(d.max_estimate),
                        max_signal_index: self.init.max_signal_index.unwrap_or(d.max_signal_index),
                    },
                }
            }
        };
        let scenario = Scenario {
            seed: self.seed,
            protocol,
            init,
            events: self.events,
            max_time: self.max_time,
            snapshot_every: self.snapshot_every,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let init = match s.init {
            InitSpec::Default { size } => InitFile {
                mode: InitMode::Default,
                size,
                max_group: None,
                max_estimate: None,
                max_signal_index: None,
            },
            InitSpec::AdversarialRandom { size, bounds } => InitFile {
                mode: InitMode::AdversarialRandom,
                size,
                max_group: Some(bounds.max_group),
                max_estimate: Some(bounds.max_estimate),
                max_signal_index: Some(bounds.max_signal_index),
            },
        };
        ScenarioFile {
            seed: s.seed,
            protocol: s.protocol.variant,
            timer_multiplier: s.protocol.timer_multiplier,
            init,
            events: s.events.clone(),
            max_time: s.max_time,
            snapshot_every: s.snapshot_every,
        }
    }
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.into_scenario()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        Scenario::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }
}
