//! Trajectories of the Markov chain of cycles.

pub mod graph;
pub mod simulate;
pub mod thinning;

pub use graph::{explore, neighbors, ExploredGraph, StateNode, TransitionEdge, TransitionRules};
pub use simulate::{empirical_expectation, simulate, simulate_ensemble, simulate_stream, EmpiricalMoment, Trajectory};
pub use thinning::{Thinning, ThinningStats};
