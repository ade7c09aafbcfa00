//! Quadrature, continuous Fourier transforms and finite differences.
//!
//! Every integral in the crate is a 1D integral over the real line, truncated to
//! `[-X, X]` and evaluated by adaptive Gauss-Legendre panels. Fourier transforms use
//! the `exp(-i 2 pi k x)` convention and are evaluated pointwise by quadrature.

mod difference;
mod profile;
mod quadrature;

pub use difference::{central_difference, richardson_derivative};
pub use profile::ComplexProfile;
pub use quadrature::{
    fourier_profile, fourier_transform, inner, inner_relaxed, integrate, integrate_with_estimate, norm_sqr, HalfWidth, Quadrature,
    QuadratureSpec,
};
