//! Numerical mountain-pass search for locally Lipschitz functions.

pub mod clarke;
pub mod classifier;
pub mod deformation;
pub mod error;
pub mod field;
pub mod linalg;
pub mod minimax;
pub mod par;
pub mod rng;
pub mod solve;
pub mod sweep;

pub use error::{Error, Result};
pub use field::ScalarField;
