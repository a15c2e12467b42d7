//! Error types shared across the toolkit.

use thiserror::Error;

/// Unified error type for all synthesis and simulation operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Ladder extraction left a remainder too large to be rounding noise.
    #[error("prototype synthesis failed: residual {residual:.3e} exceeds tolerance")]
    Synthesis { residual: f64 },

    /// Coupling calibration was requested at a near-zero point of the LDOS.
    #[error("calibration refused: LDOS {ldos:.3e} at or below threshold {threshold:.3e} (near-zero point)")]
    Calibration { ldos: f64, threshold: f64 },

    /// The requested output step cannot resolve the fastest rate in the network.
    #[error("step {dt:.3e} s too large: fastest scale {scale:.3e} rad/s requires dt*scale <= 0.1")]
    Stability { dt: f64, scale: f64 },

    /// The record never decays far enough for a meaningful exponential fit.
    #[error("energy must decay at least 10x within the record (final/initial = {ratio:.3e})")]
    InsufficientDecay { ratio: f64 },

    /// The decay is too far from a single exponential (e.g. strong-coupling beats).
    #[error("decay fit rejected: log-domain residual {residual:.3e} exceeds {limit:.3e}")]
    FitQuality { residual: f64, limit: f64 },

    /// Resolvent inversion hit an exactly real pole of a lossless network.
    #[error("resolvent singular at omega = {omega:.6e} rad/s (lossless pole)")]
    SingularResolvent { omega: f64 },

    /// LDOS of a network without any decay channel is a sum of delta functions.
    #[error("lossless network has a delta-function spectrum; add explicit broadening first")]
    LosslessLdos,

    /// Two eigenvectors carry nearly the same qubit weight (anticrossing).
    #[error("ambiguous qubit mode: top eigenvector weights {first:.4} and {second:.4} differ by less than 0.01")]
    Hybridization { first: f64, second: f64 },

    /// An inverter value left the realizable range.
    #[error("inverter {index} unrealizable: Z0*J = {value:.4} outside (0, 1); reduce fractional bandwidth")]
    Realization { index: usize, value: f64 },

    /// A fit or sweep was handed too few usable points.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The eigensolver produced an inconsistent spectrum.
    #[error("eigensolver failure: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
