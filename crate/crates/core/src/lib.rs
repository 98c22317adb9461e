//! Balanced solutions of `Ju′ + qu = wf` on a real interval when `q` and `w`
//! are matrix-valued measures (piecewise-constant densities plus atoms).
//!
//! Across an atom of `q` a solution obeys `B₊(x)u⁺(x) − B₋(x)u⁻(x) = Δw(x)f(x)`
//! with `B± = J ± Δq/2`. Where `B±` is singular, solutions need not continue
//! uniquely; the crate then partitions the window at those points, assembles
//! the finite block system linking the subintervals, and reads off the full
//! solution set, compactly supported homogeneous solutions, and the pairing
//! identities that go with them.

// `!(a < b)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocksystem;
pub mod checks;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod fuzz;
pub mod l2;
pub mod linalg;
pub mod propagation;
pub mod relations;
pub mod solutions;

pub use blocksystem::{
    assemble, assemble_window, find_singular_points, make_partition, BlockSystem, MomentVectors,
    Partition,
};
pub use coefficients::{validate, MeasureMatrix, Problem, Side, Tolerances, ValidationReport};
pub use error::{Error, Result};
pub use l2::L2Function;
pub use propagation::{
    atom_transfer, fundamental_matrix, segment_exponential, solve_ivp_regular, FundamentalMatrix,
    PiecewiseSolution,
};
pub use relations::{inner_product, lagrange_check, t0_solve, PairingReport, T0Outcome};
pub use solutions::{compact_support_solutions, lift_kernel_vector, solve_system, SolutionSet};
