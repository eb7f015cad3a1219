//! Exact ballot-problem combinatorics and semi-analytic cone-exit laws.

pub mod combinatorics;
pub mod semianalytic;

pub use combinatorics::*;
pub use semianalytic::{cone_exit_semianalytic, eta_tail_semianalytic, SemiAnalyticResult};
