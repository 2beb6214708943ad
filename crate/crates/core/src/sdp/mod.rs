//! Dense semidefinite programming: standard-form problems, an interior-point
//! solver and the fidelity programs built on top of it.

mod builders;
mod linalg;
mod problem;
mod solver;

pub use builders::{
    default_bipartitions, fidelity_fixed_problem, fidelity_incoherent_problem, fidelity_ppt_problem,
    max_fidelity_fixed, max_fidelity_incoherent, max_fidelity_ppt, realify, SUPPORT_TOL,
};
pub use problem::{block_inner, BlockMatrix, Constraint, SdpProblem, SymEntry};
pub use solver::{solve_sdp, SdpSolution, SolveStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};
