//! Reciprocity calibration for TDD massive MIMO base stations using the
//! mutual coupling between array elements as the sounding path.
//!
//! The crate is organised the way a simulation study flows:
//!
//! - [`geometry`]: planar array layout, linear-in-dB coupling model and the
//!   reciprocal inter-antenna channel `H`.
//! - [`frontend`]: non-reciprocal transmit/receive gains and the true
//!   calibration coefficients `c_m = t_m / r_m`.
//! - [`sounding`]: the measurement matrix `Y = R H T + N`.
//! - [`estimators`]: GMM (moment-condition) and EM (penalized ML) estimators,
//!   the closed-form linear-array ML and MSE scoring.
//! - [`crlb`]: Fisher information and the Cramér-Rao bound on `c`.
//! - [`downlink`]: calibrated ZF/MRT precoding, sum-rate and EVM.
//! - [`wideband`]: per-subcarrier estimation, PCA, Laplace-kernel fitting and
//!   Gaussianity checks of the calibration error.
//!
//! Antenna indices are zero-based throughout the library.

pub mod crlb;
pub mod downlink;
pub mod error;
pub mod estimators;
pub mod frontend;
pub mod geometry;
pub mod random;
pub mod sounding;
pub mod wideband;

pub use num_complex::Complex64;

pub use crate::crlb::{crlb_coefficients, fisher_information, CrlbInputs, CrlbReport};
pub use crate::downlink::{sum_rate, Precoder, Variant};
pub use crate::error::{CalError, Result};
pub use crate::estimators::{
    em_calibrate, gmm_estimate, linear_array_ml, score_mse, CalibrationEstimate, Constraint, EmInit,
    EmSettings, Method,
};
pub use crate::frontend::{deterministic_frontend, random_frontend, FrontEnd};
pub use crate::geometry::{
    build_geometry, draw_channel, reduced_mask, ArrayGeometry, ChannelMatrix, CouplingModel, MeasurementMask,
    Polarization,
};
pub use crate::sounding::{equivalent_channel, sound, SoundingData, SoundingSetup};

/// `10·log10(x)`.
#[inline]
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`to_db`].
#[inline]
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
