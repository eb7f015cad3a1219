//! Laboratory for the planar random walk that is a simple random walk off the
//! axes and is pushed toward the origin on them (outward probability
//! `1/(4 i^alpha)` at distance `i`).
//!
//! The crate has three independent computational routes that cross-check each
//! other:
//!
//! * a streaming Monte Carlo engine over two-type excursions ([`excursion`],
//!   [`montecarlo`]),
//! * deterministic linear-algebraic solvers for the axis chain, the cone exit
//!   laws and the embedded invariant measures ([`exact`]),
//! * exact ballot-problem combinatorics and their Gaussian asymptotics
//!   ([`asymptotics`]).

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod exact;
pub mod excursion;
pub mod lattice;
pub mod measure;
pub mod montecarlo;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
