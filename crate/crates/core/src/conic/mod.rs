//! Convex quadratic programs over linear equalities and semidefinite cones.
//!
//! ```text
//! minimize   ½‖W v − t‖² + cᵀv
//! subject to A v = b,   each PSD block ⪰ 0,   each NSD block ⪯ 0
//! ```
//!
//! solved by scaled operator splitting: an equality-constrained quadratic
//! step against a cached factorization, a blockwise cone projection, and a
//! dual update. Symmetric blocks are handled in `svec` coordinates
//! (off-diagonals scaled by √2) so Euclidean distances equal Frobenius
//! distances between the full matrices.

mod polish;
mod problem;
mod project;
mod reduce;
mod solver;

pub use problem::{ConeProblem, ResidualRow};
pub use project::{nsd_project, psd_project};
pub use solver::{solve, solve_with_start, ConeSolution, SolveStatus, SolverConfig};
