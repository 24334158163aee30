//! Dense symmetric eigen-decomposition by cyclic Jacobi rotations, plus a
//! few small helpers used across modules.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix: `a = V diag(λ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: DVector<f64>,
    /// Eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SymmetricEigen {
    /// Cyclic Jacobi. The input is symmetrized as `(a + aᵀ)/2` first.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "eigen-decomposition needs a square matrix");
        let mut s = (a + a.transpose()) * 0.5;
        let mut v = DMatrix::identity(n, n);
        let scale = s.norm();
        if scale == 0.0 || n < 2 {
            return Ok(Self {
                eigenvalues: s.diagonal(),
                eigenvectors: v,
            });
        }
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            if off_diagonal_norm(&s) <= JACOBI_TOL * scale {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut s, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&s) > JACOBI_TOL * scale {
            return Err(Error::EigenNoConvergence(JACOBI_MAX_SWEEPS));
        }
        Ok(Self {
            eigenvalues: s.diagonal(),
            eigenvectors: v,
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.max()
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.eigenvalues.len();
        let mut out = DMatrix::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let col = self.eigenvectors.column(k);
            out += col * col.transpose() * w;
        }
        out
    }
}

fn off_diagonal_norm(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += s[(i, j)] * s[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `s[(p, q)]` with one plane rotation, accumulating it into `v`.
fn rotate(s: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = s[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * c;
    let n = s.nrows();
    for k in 0..n {
        let skp = s[(k, p)];
        let skq = s[(k, q)];
        s[(k, p)] = c * skp - sn * skq;
        s[(k, q)] = sn * skp + c * skq;
    }
    for k in 0..n {
        let spk = s[(p, k)];
        let sqk = s[(q, k)];
        s[(p, k)] = c * spk - sn * sqk;
        s[(q, k)] = sn * spk + c * sqk;
    }
    s[(p, q)] = 0.0;
    s[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - sn * vkq;
        v[(k, q)] = sn * vkp + c * vkq;
    }
}

/// Inverse of a symmetric positive-definite matrix via Cholesky, falling back
/// to LU for indefinite input.
pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.inverse());
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{}x{} matrix", a.nrows(), a.ncols())))
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ch = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("normal matrix is not positive definite".into()))?;
    Ok(ch.solve(b))
}
