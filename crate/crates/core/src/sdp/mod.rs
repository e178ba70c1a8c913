//! Self-contained block semidefinite programming solver.

mod cone;
mod presolve;
mod problem;
mod solver;

pub use presolve::{presolve, Presolved};
pub use problem::{Block, BlockKind, BlockValue, Constraint, SdpProblem, SdpSolution, SdpStatus, Term, Tolerances};
pub use solver::solve;
