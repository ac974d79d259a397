//! Semidefinite programming over real and complex Hermitian blocks.

mod dump;
mod problem;
mod solver;

pub use dump::dump_problem;
pub use problem::{Constraint, Field, LinearEntry, SdpProblem, SparseHermitian};
pub use solver::{solve, SdpSolution, SdpStatus, SdpTolerances};
