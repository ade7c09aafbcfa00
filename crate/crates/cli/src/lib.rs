//! Batch front end for the two-source separation QFI library: sweeps, figure data,
//! loss-bound studies and self checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod fig2;
pub mod sweep;
pub mod svg;
