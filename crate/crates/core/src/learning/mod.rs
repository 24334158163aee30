//! Imitation learning of certified polynomial controllers.
//!
//! The learner fits `K(x)` to expert data while requiring `K·P = F` for some
//! `(F, P)` that satisfies the compiled Lyapunov conditions. Two heuristics
//! are provided: ADMM over `{K_i}` and `({F_i}, {P_i}, Q₁, Q₂)` with scaled
//! duals on the coupling, and projected gradient descent directly on
//! `(F, P)` through `K = F P⁻¹`.

mod admm;
mod controller;
mod data;
mod pgd;
mod problem;

pub use admm::{
    admm_dual_step, admm_fp_step, admm_k_step, augmented_lagrangian, coupling_residual, k_gradient,
    run_admm, AdmmConfig, AdmmState,
};
pub use controller::{extract_controller, LearnedController};
pub use data::{generate_data, imitation_loss, Dataset};
pub use pgd::{pgd_gradient, pgd_project, run_pgd, FactorGradient, PgdConfig};
pub use problem::{
    index_sets, CertifiedFactors, Degrees, Features, LearningProblem, ACCEPT_RESIDUAL,
};

use nalgebra::DMatrix;

use crate::Error;

pub(crate) const INIT_STREAM: u64 = 1;
pub(crate) const MINIBATCH_STREAM: u64 = 2;

/// What a run produced, including partial progress when a subproblem failed.
#[derive(Debug)]
pub struct LearnOutcome {
    /// Loss before the first iteration.
    pub initial_loss: f64,
    /// Loss of the iterate the algorithm itself tracks, one entry per
    /// completed iteration: `{K_i}` for ADMM, `F P⁻¹` for PGD.
    pub loss_trace: Vec<f64>,
    /// Loss of `F P⁻¹` per completed iteration.
    pub certified_trace: Vec<f64>,
    /// Last `{K_i}` (ADMM only).
    pub k: Option<Vec<DMatrix<f64>>>,
    /// Last certified factors.
    pub factors: Option<CertifiedFactors>,
    pub failure: Option<Error>,
}

impl LearnOutcome {
    fn new(initial_loss: f64) -> Self {
        Self {
            initial_loss,
            loss_trace: Vec::new(),
            certified_trace: Vec::new(),
            k: None,
            factors: None,
            failure: None,
        }
    }

    /// `initial_loss` followed by `loss_trace`.
    pub fn full_trace(&self) -> Vec<f64> {
        std::iter::once(self.initial_loss)
            .chain(self.loss_trace.iter().copied())
            .collect()
    }
}
