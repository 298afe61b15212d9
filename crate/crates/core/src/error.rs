use thiserror::Error;

use crate::crypto::CryptoError;
use crate::types::{ProcessorId, Ticks};

/// Configuration rejected before a run starts. `pointer` is a JSON pointer
/// into the scenario document (empty for whole-document errors).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pointer}: {message}")]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
    /// 1-based line in the source file, when known.
    pub line: Option<usize>,
}

impl ConfigError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            pointer: pointer.into(),
            message: message.into(),
            line: None,
        }
    }
}

/// Failures of the simulator itself, as opposed to protocol behaviour.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "delivery contract violated: {from} -> {to} sent at {sent} scheduled for {deliver_at} (bound {bound})"
    )]
    ContractViolation {
        from: ProcessorId,
        to: ProcessorId,
        sent: Ticks,
        deliver_at: Ticks,
        bound: Ticks,
    },
    #[error("signature oracle rejected a signing attempt: {0}")]
    Forgery(CryptoError),
    #[error("event budget of {0} exhausted at t={1}")]
    EventBudget(u64, Ticks),
}
