//! Deterministic expectation dynamics and currents.

pub mod adiabatic;
pub mod ode;
pub mod operators;
pub mod periodic;
pub mod system;

pub use adiabatic::{adiabatic_current, quantized_current, Quantization};
pub use operators::{build_operators, BiasedOperators};
pub use periodic::{average_current, evolve, monodromy, periodic_solution, spectral_gap, PeriodicSolution};
pub use system::DrivenSystem;
