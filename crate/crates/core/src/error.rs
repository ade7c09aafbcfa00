use thiserror::Error;

use crate::analytic::QfiReport;

/// Errors raised anywhere in the crate. Numerical diagnostics are carried as `f64`
/// regardless of the scalar type the computation ran in.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid quadrature settings: {0}")]
    InvalidQuadrature(String),

    #[error("quadrature did not converge within {evaluations} evaluations (estimate {estimate:e}, error {error:e})")]
    NonConvergence { estimate: f64, error: f64, evaluations: usize },

    #[error("integration domain [-{half_width}, {half_width}] truncates a non-negligible tail ({tail:e} vs scale {scale:e})")]
    DomainTooSmall { half_width: f64, tail: f64, scale: f64 },

    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),

    #[error("finite-difference step {step:e} is below coordinate precision at s = {at}")]
    StepUnderflow { step: f64, at: f64 },

    #[error("invalid aperture: {0}")]
    InvalidAperture(String),

    #[error("invalid source pair: {0}")]
    InvalidSource(String),

    #[error("degenerate source: field power {0:e} is zero")]
    DegenerateSource(f64),

    #[error("degree of coherence has modulus {0} > 1")]
    InvalidCoherence(f64),

    #[error("lemma assumptions violated: {}", .0.join("; "))]
    AssumptionViolation(Vec<String>),

    #[error("QFI per detected photon diverges at s = {s}, Re(gamma) = {re_gamma}")]
    DivergentPerDetected {
        s: f64,
        re_gamma: f64,
        /// Report with `f_det_full = +inf` and the finite limits of the other quantities.
        partial: Box<QfiReport<f64>>,
    },

    #[error("reduced representation lost rank: {0}")]
    RankCollapse(String),

    #[error("derivative has weight {0:e} outside the support of rho")]
    UnsupportedDerivative(f64),

    #[error("reduced representation failed validation: {0}")]
    InvalidRepresentation(String),

    #[error("SPADE outcomes require a Gaussian aperture, got {0}")]
    ApertureNotGaussian(String),

    #[error("mode truncation at q_max = {q_max} leaves tail mass {tail:e}")]
    TailTooHeavy { q_max: usize, tail: f64 },

    #[error("PSF is not normalized: integral of |u|^2 = {0}")]
    UnnormalizedPsf(f64),

    #[error("spatial and frequency routes disagree: {spatial:e} vs {frequency:e}")]
    ParsevalMismatch { spatial: f64, frequency: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
