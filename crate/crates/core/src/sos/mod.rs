//! Compilation of the Lyapunov conditions into Gram-matrix equalities.
//!
//! Both conditions are scalarized with an auxiliary vector `v ∈ ℝᵖ`:
//!
//! ```text
//! vᵀ[P(x̃) − ε₁I]v = [z₁(x)⊗v]ᵀ Q₁ [z₁(x)⊗v],   Q₁ ⪰ 0
//! vᵀ[S(x) + ε₂I]v = [z₂(x)⊗v]ᵀ Q₂ [z₂(x)⊗v],   Q₂ ⪯ 0
//! ```
//!
//! with `S = PAᵀMᵀ + MAP + FᵀBᵀMᵀ + MBF − Σ_{j∈J} ∂P/∂x_j (A_j Z)`. Matching
//! the coefficients of every monomial `x^α v_a v_b` on both sides gives a
//! finite list of [`LinearEquality`] rows over the entries of `{P_i}`,
//! `{F_i}`, `Q₁` and `Q₂`. `v` itself never appears numerically; all
//! bookkeeping is on `(α, a, b)` keys.

mod affine;
mod compile;

use nalgebra::DMatrix;

pub use compile::{
    choose_gram_basis, compile_p_constraint, compile_stability_constraint, DecisionLayout,
    Epsilons, GramBasis, GramConstraintSet,
};

use crate::conic::ConeProblem;
use crate::decision::{LinearEquality, VarRef};
use crate::polynomial::{PolyMatrix, SystemDef};
use crate::rng::SplitMix64;
use crate::verify::stability_matrix;
use crate::{Error, Result};

/// Result of evaluating both sides of the scalarized conditions at random
/// `(x, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompiledCheck {
    /// Largest `|lhs − rhs| / ‖v‖²` over all samples and both conditions.
    pub max_residual: f64,
    /// Largest `(|lhs| + |rhs|) / ‖v‖²`, for relative comparisons.
    pub magnitude: f64,
}

impl CompiledCheck {
    pub fn within(&self, tol: f64) -> bool {
        self.max_residual <= tol * (1.0 + self.magnitude)
    }
}

impl GramConstraintSet {
    fn check_values(&self, values: &[DMatrix<f64>]) -> Result<()> {
        let blocks = self.blocks();
        if values.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: blocks.len(),
                got: values.len(),
            });
        }
        for (b, v) in blocks.iter().zip(values) {
            if v.shape() != b.kind.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "block {} has shape {:?}, expected {:?}",
                    b.label,
                    v.shape(),
                    b.kind.shape()
                )));
            }
        }
        Ok(())
    }

    /// `P(x̃)` from block values.
    pub fn p_matrix(&self, values: &[DMatrix<f64>]) -> Result<PolyMatrix> {
        self.check_values(values)?;
        let np = self.layout().p_basis().len();
        PolyMatrix::from_coefficients(self.layout().p_basis(), &values[..np])
    }

    /// `F(x)` from block values.
    pub fn f_matrix(&self, values: &[DMatrix<f64>]) -> Result<PolyMatrix> {
        self.check_values(values)?;
        let np = self.layout().p_basis().len();
        let nf = self.layout().f_basis().len();
        PolyMatrix::from_coefficients(self.layout().f_basis(), &values[np..np + nf])
    }

    /// Block values with the given coefficients and zero Gram matrices.
    pub fn assemble(&self, p: &[DMatrix<f64>], f: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        let mut values: Vec<DMatrix<f64>> = p.iter().chain(f).cloned().collect();
        values.push(DMatrix::zeros(
            self.layout().q1_dim(),
            self.layout().q1_dim(),
        ));
        values.push(DMatrix::zeros(
            self.layout().q2_dim(),
            self.layout().q2_dim(),
        ));
        self.check_values(&values)?;
        Ok(values)
    }

    /// The pure feasibility problem: blocks, equalities, no objective.
    pub fn feasibility_problem(&self) -> ConeProblem {
        let mut problem = ConeProblem::new(self.blocks());
        problem.add_equalities(self.equalities().cloned());
        problem
    }

    /// Residual of every equality at `values`, in emission order.
    pub fn residuals(&self, values: &[DMatrix<f64>]) -> Result<Vec<f64>> {
        self.check_values(values)?;
        let lookup = |v: VarRef| values[v.block.0][(v.row, v.col)];
        Ok(self.equalities().map(|eq| eq.residual(lookup)).collect())
    }

    /// Adjusts `Q₁`, `Q₂` by the least-norm correction that makes every
    /// equality hold for the current `{P_i}`, `{F_i}`.
    ///
    /// Each Gram entry occurs in exactly one equality, so the correction
    /// decouples row by row. Cone membership of the result is not enforced.
    pub fn complete_gram(&self, values: &mut [DMatrix<f64>]) -> Result<()> {
        self.check_values(values)?;
        for eq in self.equalities() {
            let r = {
                let lookup = |v: VarRef| values[v.block.0][(v.row, v.col)];
                eq.residual(lookup)
            };
            apply_correction(eq, r, values);
        }
        Ok(())
    }

    /// Evaluates both sides of the two scalarized conditions at `samples`
    /// random points `(x, v) ∈ [−2, 2]ⁿ⁺ᵖ`.
    ///
    /// Differences are divided by `‖v‖²` so the measure does not depend on
    /// the scale of `v`.
    pub fn verify_compiled(
        &self,
        sys: &SystemDef,
        values: &[DMatrix<f64>],
        samples: usize,
        seed: u64,
    ) -> Result<CompiledCheck> {
        let p = self.p_matrix(values)?;
        let f = self.f_matrix(values)?;
        let q1 = &values[values.len() - 2];
        let q2 = &values[values.len() - 1];
        let eps = self.eps();
        let ident = DMatrix::<f64>::identity(sys.p(), sys.p());
        let mut rng = SplitMix64::new(seed);
        let mut out = CompiledCheck {
            max_residual: 0.0,
            magnitude: 0.0,
        };
        for _ in 0..samples {
            let x: Vec<f64> = (0..sys.n()).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let v: Vec<f64> = (0..sys.p()).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let vn: f64 = v.iter().map(|a| a * a).sum();
            if vn == 0.0 {
                continue;
            }
            let vv = nalgebra::DVector::from_column_slice(&v);
            let h1 = p.eval_unchecked(&x) - &ident * eps.eps1;
            let h2 = stability_matrix(sys, &p, &f, &x) + &ident * eps.eps2;
            let pairs = [
                (vv.dot(&(&h1 * &vv)), gram_value(self.z1(), q1, &x, &v)),
                (vv.dot(&(&h2 * &vv)), gram_value(self.z2(), q2, &x, &v)),
            ];
            for (lhs, rhs) in pairs {
                out.max_residual = out.max_residual.max((lhs - rhs).abs() / vn);
                out.magnitude = out.magnitude.max((lhs.abs() + rhs.abs()) / vn);
            }
        }
        Ok(out)
    }
}

fn apply_correction(eq: &LinearEquality, r: f64, values: &mut [DMatrix<f64>]) {
    let norm: f64 = eq.rhs.iter().map(|t| t.weight * t.weight).sum();
    if norm == 0.0 || r == 0.0 {
        return;
    }
    for t in &eq.rhs {
        let delta = t.weight * r / norm;
        let m = &mut values[t.var.block.0];
        m[(t.var.row, t.var.col)] += delta;
        if t.var.row != t.var.col {
            m[(t.var.col, t.var.row)] += delta;
        }
    }
}

fn gram_value(gb: &GramBasis, q: &DMatrix<f64>, x: &[f64], v: &[f64]) -> f64 {
    let k = nalgebra::DVector::from_vec(gb.eval_kron(x, v));
    k.dot(&(q * &k))
}

#[cfg(test)]
mod tests;
