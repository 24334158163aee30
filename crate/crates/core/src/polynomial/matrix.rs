use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{Exponent, MonomialBasis, Polynomial};
use crate::{Error, Result};

/// Matrix-valued polynomial `M(x) = Σ_α M_α x^α` with `rows × cols`
/// coefficient matrices keyed by monomial.
///
/// Against a [`MonomialBasis`] this is the representation `Σ_i M_i 𝓜_d[x]_i`;
/// see [`PolyMatrix::coefficients_in`] and [`PolyMatrix::from_coefficients`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    nvars: usize,
    rows: usize,
    cols: usize,
    terms: BTreeMap<Exponent, DMatrix<f64>>,
}

impl PolyMatrix {
    pub fn zeros(nvars: usize, rows: usize, cols: usize) -> Self {
        Self {
            nvars,
            rows,
            cols,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, m: DMatrix<f64>) -> Self {
        let mut out = Self::zeros(nvars, m.nrows(), m.ncols());
        out.add_term(Exponent::zero(nvars), &m);
        out
    }

    pub fn identity(nvars: usize, n: usize) -> Self {
        Self::constant(nvars, DMatrix::identity(n, n))
    }

    /// Builds from a row-major grid of scalar polynomials.
    pub fn from_entries(entries: &[Vec<Polynomial>]) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        let nvars = entries
            .iter()
            .flatten()
            .map(Polynomial::nvars)
            .next()
            .ok_or_else(|| Error::ShapeMismatch("empty polynomial matrix".into()))?;
        let mut out = Self::zeros(nvars, rows, cols);
        for (r, row) in entries.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (c, p) in row.iter().enumerate() {
                if p.nvars() != nvars {
                    return Err(Error::DimensionMismatch {
                        expected: nvars,
                        got: p.nvars(),
                    });
                }
                for (e, coef) in p.terms() {
                    out.add_entry(e.clone(), r, c, coef);
                }
            }
        }
        Ok(out)
    }

    /// Column vector from a list of polynomials.
    pub fn column(entries: &[Polynomial]) -> Result<Self> {
        let grid: Vec<Vec<Polynomial>> = entries.iter().map(|p| vec![p.clone()]).collect();
        Self::from_entries(&grid)
    }

    /// `Σ_i coeffs[i] · basis_i`.
    pub fn from_coefficients(basis: &MonomialBasis, coeffs: &[DMatrix<f64>]) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        let (rows, cols) = coeffs.first().map_or((0, 0), |m| m.shape());
        let mut out = Self::zeros(basis.nvars(), rows, cols);
        for (e, m) in basis.iter().zip(coeffs) {
            if m.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient of shape {:?}, expected {:?}",
                    m.shape(),
                    (rows, cols)
                )));
            }
            out.add_term(e.clone(), m);
        }
        Ok(out)
    }

    /// Coefficient matrices in `basis` order. Fails if a term lies outside
    /// the basis.
    pub fn coefficients_in(&self, basis: &MonomialBasis) -> Result<Vec<DMatrix<f64>>> {
        let mut out = vec![DMatrix::zeros(self.rows, self.cols); basis.len()];
        for (e, m) in &self.terms {
            let i = basis
                .index_of(e)
                .ok_or_else(|| Error::DegreeMismatch(format!("monomial {e} not in basis")))?;
            out[i] = m.clone();
        }
        Ok(out)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &DMatrix<f64>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exponent) -> Option<&DMatrix<f64>> {
        self.terms.get(e)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    /// Sorted indices of variables that occur in some term.
    pub fn variables(&self) -> Vec<usize> {
        let mut present = vec![false; self.nvars];
        for e in self.terms.keys() {
            for v in e.support() {
                present[v] = true;
            }
        }
        (0..self.nvars).filter(|&v| present[v]).collect()
    }

    pub fn add_term(&mut self, e: Exponent, m: &DMatrix<f64>) {
        assert_eq!(m.shape(), (self.rows, self.cols), "coefficient shape");
        assert_eq!(e.nvars(), self.nvars, "exponent arity");
        let slot = self
            .terms
            .entry(e.clone())
            .or_insert_with(|| DMatrix::zeros(self.rows, self.cols));
        *slot += m;
        if slot.iter().all(|&v| v == 0.0) {
            self.terms.remove(&e);
        }
    }

    fn add_entry(&mut self, e: Exponent, r: usize, c: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let mut m = DMatrix::zeros(self.rows, self.cols);
        m[(r, c)] = v;
        self.add_term(e, &m);
    }

    /// Entry `(r, c)` as a scalar polynomial.
    pub fn entry(&self, r: usize, c: usize) -> Polynomial {
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, m)| (e.clone(), m[(r, c)])),
        )
    }

    /// Row `r` as a `1 × cols` polynomial matrix.
    pub fn row(&self, r: usize) -> PolyMatrix {
        let mut out = Self::zeros(self.nvars, 1, self.cols);
        for (e, m) in &self.terms {
            out.add_term(e.clone(), &m.rows(r, 1).into_owned());
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (e, m) in &self.terms {
            out += m * e.eval(x);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self {
            nvars: self.nvars,
            rows: self.cols,
            cols: self.rows,
            terms: self
                .terms
                .iter()
                .map(|(e, m)| (e.clone(), m.transpose()))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zeros(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            out.add_term(e.clone(), &(m * s));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() || self.nvars != other.nvars {
            return Err(Error::ShapeMismatch(format!(
                "add {:?} + {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = self.clone();
        for (e, m) in &other.terms {
            out.add_term(e.clone(), m);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.nvars != other.nvars {
            return Err(Error::ShapeMismatch(format!(
                "matmul {:?} x {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Self::zeros(self.nvars, self.rows, other.cols);
        for (ea, ma) in &self.terms {
            for (eb, mb) in &other.terms {
                out.add_term(ea.mul(eb), &(ma * mb));
            }
        }
        Ok(out)
    }

    /// Multiplies every coefficient by the scalar polynomial `f`.
    pub fn mul_scalar_poly(&self, f: &Polynomial) -> Self {
        let mut out = Self::zeros(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            for (ef, c) in f.terms() {
                out.add_term(e.mul(ef), &(m * c));
            }
        }
        out
    }

    /// Term-by-term `∂/∂x_var`.
    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zeros(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            if let Some((factor, de)) = e.derivative(var) {
                out.add_term(de, &(m * factor));
            }
        }
        out
    }

    /// Drops coefficient entries with magnitude below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Self::zeros(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            let cleaned = m.map(|v| if v.abs() < tol { 0.0 } else { v });
            out.add_term(e.clone(), &cleaned);
        }
        out
    }

    /// Whether every coefficient is symmetric to within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && self
                .terms
                .values()
                .all(|m| (m - m.transpose()).amax() <= tol)
    }

    /// Whether row `r` is identically zero.
    pub fn row_is_zero(&self, r: usize) -> bool {
        self.terms
            .values()
            .all(|m| m.row(r).iter().all(|&v| v == 0.0))
    }
}

/// Jacobian `∂Z_i/∂x_j` of a vector polynomial, as a `p × n` matrix.
pub fn jacobian(z: &[Polynomial]) -> Result<PolyMatrix> {
    let n = z
        .first()
        .map(Polynomial::nvars)
        .ok_or_else(|| Error::ShapeMismatch("empty vector polynomial".into()))?;
    let grid: Vec<Vec<Polynomial>> = z
        .iter()
        .map(|zi| (0..n).map(|j| zi.derivative(j)).collect())
        .collect();
    PolyMatrix::from_entries(&grid)
}
