use nalgebra::{DMatrix, DVector};

use crate::linalg::inverse;
use crate::polynomial::{PolyMatrix, SystemDef, PRUNE_THRESHOLD};
use crate::{Error, Result};

/// A state-feedback law `u = K(x)Z(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnedController {
    /// Polynomial gain `K(x)`.
    Polynomial(PolyMatrix),
    /// `K(x) = F(x) P(x̃)⁻¹` with non-constant `P`.
    Rational { f: PolyMatrix, p: PolyMatrix },
}

impl LearnedController {
    pub fn gain(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            LearnedController::Polynomial(k) => k.eval(x),
            LearnedController::Rational { f, p } => {
                let pm = p.eval(x)?;
                let pinv = inverse(&pm)?;
                Ok(f.eval(x)? * pinv)
            }
        }
    }

    /// `K(x)Z(x)`.
    pub fn input(&self, sys: &SystemDef, x: &[f64]) -> Result<DVector<f64>> {
        sys.check_state(x)?;
        Ok(self.gain(x)? * sys.eval_z(x))
    }

    pub fn as_polynomial(&self) -> Option<&PolyMatrix> {
        match self {
            LearnedController::Polynomial(k) => Some(k),
            LearnedController::Rational { .. } => None,
        }
    }
}

/// `K = F P⁻¹`: an exact polynomial when `P` is constant, otherwise an
/// evaluable rational controller.
pub fn extract_controller(f: &PolyMatrix, p: &PolyMatrix) -> Result<LearnedController> {
    if f.cols() != p.rows() || !p.is_symmetric(0.0) {
        return Err(Error::ShapeMismatch(format!(
            "F is {:?} and P is {:?}",
            f.shape(),
            p.shape()
        )));
    }
    if p.degree() > 0 {
        return Ok(LearnedController::Rational {
            f: f.clone(),
            p: p.clone(),
        });
    }
    let p0 = p.eval_unchecked(&vec![0.0; p.nvars()]);
    let pinv = inverse(&p0)?;
    let k = f.matmul(&PolyMatrix::constant(f.nvars(), pinv))?;
    Ok(LearnedController::Polynomial(k.pruned(PRUNE_THRESHOLD)))
}
