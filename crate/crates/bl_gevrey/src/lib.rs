//! Numerical laboratory for the two-dimensional compressible boundary-layer
//! system with coupled viscous and thermal layers.
//!
//! The crate simulates the regularized system on an x-periodic strip over a
//! truncated half-line in y, builds the auxiliary fields used to cancel the
//! derivative loss, and measures the Gevrey-weighted norms that control the
//! analytic radius.

pub mod aux;
pub mod dyadic;
pub mod error;
pub mod field;
pub mod gevrey;
pub mod grid;
pub mod mms;
pub mod monitor;
pub mod run;
pub mod solver;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::Grid;
