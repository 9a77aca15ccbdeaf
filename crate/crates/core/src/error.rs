// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced anywhere in the pulse pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed pulse or bath file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing required key: {0}")]
    MissingKey(String),

    /// Integration grid rejected before any work was done.
    #[error("invalid step count {steps}: {reason}")]
    InvalidSteps { steps: usize, reason: String },

    /// The spherical chart is singular here; not a physical failure.
    #[error("spherical chart singular at t = {t}")]
    Singularity { t: f64 },

    #[error("axis-angle unwrapping ambiguous at sample {index}")]
    AmbiguousUnwrap { index: usize },

    /// Parameter vector the root finder has to step away from.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no converged inner solve inside search range [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    /// Step-count refinement changed the measured correction error too much.
    #[error("step count {steps} too small: doubling changes d by {relative_change:.3e}")]
    StepsTooSmall { steps: usize, relative_change: f64 },

    #[error("only {remaining} points above the numerical floor, need at least 4")]
    TooFewPoints { remaining: usize },

    #[error("malformed Pauli string: {0}")]
    Pauli(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
