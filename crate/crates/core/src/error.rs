//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside an operation's mathematical domain
    /// (non-finite angle, pixel off the sensor, non-positive time step).
    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario file could not be parsed at the given line.
    #[error("scenario line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    /// A scenario violated a cross-field invariant after parsing.
    #[error("scenario: {msg}")]
    Config { msg: String },

    /// An internal interface contract was broken by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The vehicle state went non-finite during a run.
    #[error("numeric fault at t={t:.3} s: {what}")]
    Numeric { t: f64, what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
