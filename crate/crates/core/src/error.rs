use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates the invariant of the type that holds it.
    #[error("invalid {field} = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("traces do not share a common delay grid: {0}")]
    GridMismatch(String),

    #[error("delay grid too coarse for the pulse: step {step:e} s > {limit:e} s")]
    GridTooCoarse { step: f64, limit: f64 },

    #[error("cannot convert non-positive linear value {value} at sample {index} to dB")]
    NonPositiveLinear { index: usize, value: f64 },

    #[error("transmitter {0:?} is not strictly inside the room")]
    OutsideRoom([f64; 3]),

    #[error("no valid transmitter placement at distance {0} m")]
    NoPlacement(f64),

    #[error("fit window holds {samples} usable samples, need more than {params}")]
    DegenerateWindow { samples: usize, params: usize },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            field,
            value,
            reason,
        }
    }
}
