//! Quantum and classical Fisher information for estimating the separation of two
//! partially coherent sources imaged through a lossy 4f system.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32` and `f64`).
//! The aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod loss;
pub mod measurement;
pub mod numerics;
pub mod optics;
pub mod oracle;
pub mod real;
pub mod state;

pub use error::{Error, Result};
pub use optics::Convention;
pub use real::Real;

pub type ComplexProfile = numerics::ComplexProfile<f64>;
pub type QuadratureSpec = numerics::QuadratureSpec<f64>;
pub type Aperture = optics::Aperture<f64>;
pub type SourcePair = optics::SourcePair<f64>;
pub type QfiReport = analytic::QfiReport<f64>;
pub type OutcomeDistribution = measurement::OutcomeDistribution<f64>;
pub type GramBound = loss::GramBound<f64>;
pub type ReducedRepresentation = oracle::ReducedRepresentation<f64>;
