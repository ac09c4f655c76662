use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped by failure class so that front ends can map them
/// onto distinct diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or out-of-range input.
    #[error("invalid input: {0}")]
    Input(String),
    /// Text that could not be parsed (rationals, words, JSON).
    #[error("parse error: {0}")]
    Parse(String),
    /// An exhaustive enumeration would exceed the configured budget.
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    /// No shift-invariant measure satisfies the frequency caps.
    #[error("infeasible constraints: smallest achievable cap violation is {violation:.3e}")]
    Infeasible { violation: f64 },
    /// An iterative method hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    /// A measure required to be shift-invariant is not.
    #[error("measure is not shift-invariant (max defect {defect:.3e})")]
    NotShiftInvariant { defect: f64 },
    /// A Markov chain has more than one closed class.
    #[error("chain is reducible; stranded vertex set {0:?}")]
    Reducible(Vec<usize>),
    /// A cycle adjustment would make an edge weight negative.
    #[error("adjustment drives edge {edge} negative")]
    NegativeWeight { edge: usize },
    /// A modelled encoder error event.
    #[error("encoder error event {0}")]
    Event(crate::codec::ErrorEvent),
    /// Encoder or decoder failure that is not a modelled error event.
    #[error("codec failure: {0}")]
    Codec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<S: Into<String>>(msg: S) -> Error {
    Error::Input(msg.into())
}
