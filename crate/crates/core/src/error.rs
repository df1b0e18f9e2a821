//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violated an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// The time grid cannot resolve the requested dynamics.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// A non-finite value appeared during the SFA quadrature.
    #[error("non-finite value at t = {t} a.u., t' = {t_prime} a.u. ({context})")]
    NonFinite { t: f64, t_prime: f64, context: String },

    /// A statistic is undefined because the underlying moment vanishes.
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// The requested quadrature scheme cannot represent the distribution.
    #[error("scheme refused: {0}")]
    SchemeRefused(String),

    /// No registered strategy under this name.
    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy { kind: &'static str, name: String, available: String },

    /// Fock-space truncation is too small for the requested squeezing.
    #[error("Fock truncation n_max = {n_max} inadequate; need at least {suggested}")]
    TruncationInadequate { n_max: usize, suggested: usize },

    /// No photon-exchange channel exists within the enumeration bound.
    #[error("no channel found: {0}")]
    ChannelNotFound(String),

    /// An ensemble node failed; carries enough context to identify the run.
    #[error("ensemble node {index} (alpha = {alpha_re:+e}{alpha_im:+e}i) failed: {source}")]
    NodeFailed { index: usize, alpha_re: f64, alpha_im: f64, source: Box<Error> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
