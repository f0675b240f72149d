//! Simulator and library for the dynamic size counting population protocol.
//!
//! Anonymous agents meet in uniformly random pairs. Each agent keeps a
//! random-walk `group`, a decaying signal per group value, and an estimate of
//! `log₂ n` that is recomputed whenever the first missing signal drifts too
//! far from it. The [`sim`] module drives populations through adversarial
//! additions and removals; [`metrics`] measures convergence and holding;
//! [`oracle`] holds independent reference computations.

pub mod agent;
pub mod error;
pub mod export;
pub mod metrics;
pub mod oracle;
pub mod protocol;
pub mod scenario;
pub mod sim;

pub use agent::{AgentState, Coin, Phase};
pub use error::{Error, Result};
pub use metrics::{CorrectnessBand, Holding, Snapshot};
pub use protocol::{ProtocolKind, Variant};
pub use sim::{AdversarialBounds, AdversaryEvent, EventAction, InitSpec, Population, Scenario};
