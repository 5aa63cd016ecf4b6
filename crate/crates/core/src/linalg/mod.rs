//! Exact integer and rational linear algebra.

pub mod exact;
pub mod matrix;
pub mod snf;

pub use matrix::{rational_to_f64, IntMatrix, Matrix, RatMatrix};
pub use snf::{smith_normal_form, Smith};
