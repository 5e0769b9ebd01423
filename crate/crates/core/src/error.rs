use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The stereographic chart is undefined at the projection pole.
    #[error("point is the projection pole")]
    Pole,
    /// A configuration knob is out of range.
    #[error("config error: {0}")]
    Config(String),
    /// A construction would exceed the documented memory bound.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The two boundary sets of a condenser cannot be joined.
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    /// A pointwise quantity has no value at the requested point.
    #[error("undefined at {at}: {reason}")]
    Undefined { at: f64, reason: String },
    /// An iterative method stopped before reaching its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
