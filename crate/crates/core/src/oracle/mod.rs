//! Brute-force QFI: the state and its derivative are written in a small orthonormal
//! basis and the SLD equation is solved through an eigendecomposition.

mod matrix;
mod reduce;
mod spectral;

pub use matrix::{hermitian_eigen, HermitianEigen, SquareMatrix};
pub use reduce::{reduce, reduce_with_order, ReducedRepresentation, StatePart, DEFAULT_ORDER};
pub use spectral::{qfi_spectral, sld_ansatz, AnsatzCheck, SpectralQfi};
