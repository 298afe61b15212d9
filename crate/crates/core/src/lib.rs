//! Lumiere view synchronization: protocol state machines, a deterministic
//! partial-synchrony simulator, adversary strategies and trace metrics.

pub mod clock;
pub mod crypto;
pub mod error;
pub mod lumiere;
pub mod protocol;
pub mod schedule;
pub mod types;
pub mod baselines;
pub mod engine;
pub mod adversary;
pub mod config;
pub mod node;
pub mod sim;
pub mod trace;
pub mod metrics;
pub mod experiment;
