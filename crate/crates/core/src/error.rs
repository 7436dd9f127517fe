//! Error type shared by all estimator stages.

use alloc::string::String;

/// Failure modes of the estimator stack.
///
/// `Estimation` is the only variant expected during normal operation (e.g. a
/// root deficit in root-MUSIC at low SNR); callers record it as a failed trial
/// rather than aborting a sweep.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CascadeError {
    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Dimensions or parameters are inconsistent with each other.
    #[error("config error: {0}")]
    Config(String),
    /// A training schedule cannot be realized with the given resources.
    #[error("infeasible schedule: {0}")]
    Infeasible(String),
    /// An estimation step failed on this realization (recoverable per trial).
    #[error("estimation failure: {0}")]
    Estimation(String),
    /// A numerical routine did not produce a usable result.
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CascadeError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Self::Infeasible(msg.into())
    }
    pub(crate) fn estimation(msg: impl Into<String>) -> Self {
        Self::Estimation(msg.into())
    }
}
