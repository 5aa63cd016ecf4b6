//! Markov chains of cycles on finite CW complexes.
//!
//! The crate covers the exact combinatorial layer (boundary matrices, Smith normal form,
//! spanning trees and co-trees), the deterministic expectation dynamics driven by a
//! periodic protocol, stochastic trajectory simulation, and the average current with its
//! adiabatic and low-temperature limits.

pub mod builtin;
pub mod complex;
pub mod dynamics;
pub mod error;
pub mod forests;
pub mod io;
pub mod linalg;
pub mod protocol;
pub mod quadrature;
pub mod stochastic;

pub use complex::{Chain, CwComplex, HomologySummary, IntChain, RatChain, RealChain, Subcomplex};
pub use error::{Error, Result};
pub use forests::ForestCatalog;
pub use protocol::{DrivingProtocol, WeightSystem};
