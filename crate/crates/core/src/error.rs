use thiserror::Error;

/// Errors surfaced by the spectral toolbox.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The radius schedule needs a > 0, i.e. s > 1/(2+gamma) for the attached
    /// interaction exponent.
    #[error("sub-critical Gevrey exponent: s = {s} requires s > {threshold} for gamma = {gamma}")]
    SubCriticalExponent { s: f64, gamma: f64, threshold: f64 },

    /// Gliding-frame conversions only land on the eta lattice for times that
    /// are integer multiples of the eta spacing.
    #[error("time {t} is not aligned to the eta lattice (spacing {deta})")]
    NonAlignedTime { t: f64, deta: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Filamentation has reached the eta boundary: the discarded spectral mass
    /// exceeds the configured threshold.
    #[error("resolution alarm at t = {t}: {detail}")]
    ResolutionAlarm { t: f64, detail: String },

    #[error("instability detected: {0}")]
    Instability(String),

    #[error("numerical failure at t = {t}: {detail}")]
    NumericalFailure { t: f64, detail: String },

    /// A quadrature did not converge, or an integral diverges for the
    /// requested parameters.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("run has not decayed: {0}")]
    NotDecayed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
