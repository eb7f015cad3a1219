//! Deterministic solvers for the distributional objects of the model.

pub mod axis;
pub mod cone;
pub mod invariant;
pub mod potential;

pub use axis::{
    axis_absorption, reversibility_residual, shortest_path_log_prob, shortest_path_prob,
    AxisChain, AxisSolveResult, ChainValues,
};
pub use cone::{cone_exit, reverse_sum, ConeExitLaw, ReverseSum};
pub use invariant::{constants, embedded_invariant, ChainKind, Constants, EmbeddedSystem, InvariantResult};
pub use potential::PotentialTable;
