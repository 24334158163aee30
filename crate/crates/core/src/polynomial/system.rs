use nalgebra::{DMatrix, DVector};

use super::{jacobian, PolyMatrix, Polynomial};
use crate::{Error, Result};

/// Plant `ẋ = A(x) Z(x) + B(x) u` with `x ∈ ℝⁿ`, `u ∈ ℝᵐ`, `Z ∈ ℝᵖ`.
///
/// Construction derives the Jacobian `M = ∂Z/∂x` and the set `J` of
/// identically-zero rows of `B`; the state coordinates in `J` are the only
/// ones the Lyapunov matrix `P` may depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDef {
    a: PolyMatrix,
    b: PolyMatrix,
    z: Vec<Polynomial>,
    z_col: PolyMatrix,
    m: PolyMatrix,
    zero_rows: Vec<usize>,
}

impl SystemDef {
    pub fn new(a: PolyMatrix, b: PolyMatrix, z: Vec<Polynomial>) -> Result<Self> {
        let n = a.rows();
        let p = z.len();
        if p == 0 {
            return Err(Error::InvalidSystem(
                "Z must have at least one entry".into(),
            ));
        }
        if a.nvars() != n || b.nvars() != n || z.iter().any(|zi| zi.nvars() != n) {
            return Err(Error::InvalidSystem(format!(
                "all polynomials must be over the {n} state variables"
            )));
        }
        if a.cols() != p {
            return Err(Error::InvalidSystem(format!(
                "A is {}x{}, expected {n}x{p}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != n || b.cols() == 0 {
            return Err(Error::InvalidSystem(format!(
                "B is {}x{}, expected {n}xm with m >= 1",
                b.rows(),
                b.cols()
            )));
        }
        for (i, zi) in z.iter().enumerate() {
            if zi.coeff(&super::Exponent::zero(n)) != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "Z[{}] has a constant term, so Z(0) != 0",
                    i + 1
                )));
            }
        }
        let m = jacobian(&z)?;
        let zero_rows = (0..n).filter(|&r| b.row_is_zero(r)).collect();
        let z_col = PolyMatrix::column(&z)?;
        Ok(Self {
            a,
            b,
            z,
            z_col,
            m,
            zero_rows,
        })
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Input dimension `m`.
    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// Length `p` of `Z(x)`.
    pub fn p(&self) -> usize {
        self.z.len()
    }

    pub fn a(&self) -> &PolyMatrix {
        &self.a
    }

    pub fn b(&self) -> &PolyMatrix {
        &self.b
    }

    pub fn z(&self) -> &[Polynomial] {
        &self.z
    }

    /// `Z` as a `p × 1` polynomial matrix.
    pub fn z_column(&self) -> &PolyMatrix {
        &self.z_col
    }

    /// Jacobian `M(x) = ∂Z/∂x`, `p × n`.
    pub fn jacobian(&self) -> &PolyMatrix {
        &self.m
    }

    /// Indices of identically-zero rows of `B` (the set `J`), which are also
    /// the variables of the reduced state `x̃`.
    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }

    pub fn reduced_vars(&self) -> &[usize] {
        &self.zero_rows
    }

    pub fn eval_z(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.p(), self.z.iter().map(|zi| zi.eval_unchecked(x)))
    }

    /// `ẋ = A(x)Z(x) + B(x)u`.
    pub fn dynamics(&self, x: &[f64], u: &DVector<f64>) -> DVector<f64> {
        let z = self.eval_z(x);
        self.a.eval_unchecked(x) * z + self.b.eval_unchecked(x) * u
    }

    pub fn eval_a(&self, x: &[f64]) -> DMatrix<f64> {
        self.a.eval_unchecked(x)
    }

    pub fn eval_b(&self, x: &[f64]) -> DMatrix<f64> {
        self.b.eval_unchecked(x)
    }

    pub fn eval_m(&self, x: &[f64]) -> DMatrix<f64> {
        self.m.eval_unchecked(x)
    }

    pub fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Exponent;

    fn x(i: usize) -> Polynomial {
        Polynomial::var(2, i)
    }

    fn simple(b: DMatrix<f64>, z: Vec<Polynomial>) -> Result<SystemDef> {
        let a = PolyMatrix::constant(2, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        SystemDef::new(a, PolyMatrix::constant(2, b), z)
    }

    #[test]
    fn zero_rows_of_b() {
        let sys = simple(DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), vec![x(0), x(1)]).unwrap();
        assert_eq!(sys.zero_rows(), &[0]);
        assert_eq!(sys.jacobian(), &PolyMatrix::identity(2, 2));
        assert_eq!((sys.n(), sys.m(), sys.p()), (2, 1, 2));
    }

    #[test]
    fn zero_row_detection_is_symbolic() {
        // B = [x1 - x1 (collapses to 0); x2]
        let b = PolyMatrix::from_entries(&[vec![&x(0) - &x(0)], vec![x(1)]]).unwrap();
        let a = PolyMatrix::identity(2, 2);
        let sys = SystemDef::new(a, b, vec![x(0), x(1)]).unwrap();
        assert_eq!(sys.zero_rows(), &[0]);
    }

    #[test]
    fn rejects_z_with_constant_term() {
        let z = vec![&x(0) + &Polynomial::constant(2, 1.0), x(1)];
        let err = simple(DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), z).unwrap_err();
        assert!(matches!(err, Error::InvalidSystem(_)));
    }

    #[test]
    fn rejects_bad_shapes() {
        let a = PolyMatrix::identity(2, 3);
        let b = PolyMatrix::constant(2, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]));
        assert!(SystemDef::new(a, b, vec![x(0), x(1)]).is_err());
    }

    #[test]
    fn dynamics_evaluation() {
        let sys = simple(DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), vec![x(0), x(1)]).unwrap();
        let dx = sys.dynamics(&[1.0, 2.0], &DVector::from_element(1, 0.5));
        assert_eq!(dx.as_slice(), &[2.0, -0.5]);
        let _ = Exponent::zero(2);
    }
}
