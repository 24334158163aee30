//! Sparse multivariate polynomials over `x = (x1, ..., xn)`.
//!
//! Variables are addressed by zero-based index. Monomials are ordered
//! graded-lexicographically (total degree first, then larger powers of
//! lower-indexed variables first), so `basis(2, 2)` is
//! `[1, x1, x2, x1^2, x1*x2, x2^2]` and truncating by degree keeps a prefix.

mod exponent;
mod matrix;
mod poly;
mod system;
pub mod text;

pub use exponent::{basis, basis_over, Exponent, MonomialBasis};
pub use matrix::{jacobian, PolyMatrix};
pub use poly::Polynomial;
pub use system::SystemDef;

/// Coefficients smaller than this are dropped when numeric solver output is
/// turned back into polynomials.
pub const PRUNE_THRESHOLD: f64 = 1e-14;
