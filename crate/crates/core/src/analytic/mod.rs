//! QFI of the two-source state through the orthogonal-family lemma, and the closed
//! forms for a Gaussian aperture.

mod gaussian;
mod lemma;
mod point;
mod report;

pub use gaussian::gaussian_closed_forms;
pub use lemma::{pure_state_qfi, qfi_lemma_general, HilbertVector, TangentVector};
pub use point::{branch_moments, qfi_finite_width, qfi_point_sources, BranchMoments, FiniteWidthQfi};
pub use report::{QfiParams, QfiReport};
