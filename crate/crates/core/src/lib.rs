//! Imitation learning of polynomial state-feedback controllers that carry a
//! sum-of-squares Lyapunov certificate for a known polynomial plant.
//!
//! The crate is organised bottom-up:
//!
//! * [`polynomial`]: sparse multivariate polynomials, graded-lex monomial
//!   bases, polynomial matrices and the plant description [`SystemDef`].
//! * [`sos`]: compiles the Gram-matrix form of the Lyapunov conditions into
//!   scalar linear equalities plus PSD/NSD cone memberships.
//! * [`conic`]: an operator-splitting solver for convex quadratic programs
//!   over those equalities and cones.
//! * [`learning`]: training data, the imitation loss and the two outer
//!   heuristics (ADMM and projected gradient descent).
//! * [`verify`]: independent certificate checks on a grid and RK4
//!   closed-loop simulation.
//! * [`experiment`]: configuration, built-in experiments and the sweep runner
//!   behind the `sosil` binary.
//!
//! With the default `parallel` feature, sweeps and grid evaluations run on
//! rayon; without it the same code paths execute sequentially.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conic;
pub mod decision;
pub mod error;
pub mod experiment;
pub mod learning;
pub mod linalg;
pub mod par;
pub mod polynomial;
pub mod rng;
pub mod sos;
pub mod verify;

pub use error::{Error, Result};
pub use polynomial::{Exponent, MonomialBasis, PolyMatrix, Polynomial, SystemDef};
