//! Polarimetric room electromagnetics.
//!
//! Closed-form polarimetric power delay spectrum (PDS) of a box-shaped room,
//! its reverberation and polarimetric mixing time constants, the
//! cross-polarization ratio (CPR), distance-conditioned variants, an
//! independent mirror-source Monte-Carlo simulator, the band-limited/noisy
//! observation model and a nonlinear least-squares fitter.
//!
//! All delays are in seconds and all power densities are normalized to unit
//! transmit power per second of delay.

pub mod error;
pub mod exec;
pub mod fitter;
pub mod measurement;
pub mod model;
pub mod oracle;
pub mod transform;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fitter::{fit, predict, residual, Bounds, FitMethod, FitParams, FitProblem, FitResult};
pub use measurement::{
    average_pdp, db_linear_convert, observed_pds, DelayGrid, ObservationParams, PdpTrace,
    PulseKind, PulseShape, Scale,
};
pub use model::{
    bounce_matrix, bounce_matrix_power, co_cross_ratio, cpr, cpr_distance, mixing_constant,
    mixing_time, pds, pds_asymptote, pds_components, pds_conditional, reverberation_time,
    ConditionalPds, DistanceCondition, PdsParams, PolGain, RoomGeometry, Spike, WallMaterial,
    SPEED_OF_LIGHT,
};
pub use oracle::{enumerate_images, simulate_pdp, ImageSource, Placement, SimConfig, SimOutput};
