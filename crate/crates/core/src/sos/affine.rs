//! Polynomial matrices whose coefficients are affine in decision entries.

use std::collections::BTreeMap;

use crate::decision::{BlockId, VarRef};
use crate::polynomial::{Exponent, MonomialBasis, PolyMatrix, Polynomial};

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Affine {
    pub terms: BTreeMap<VarRef, f64>,
    pub constant: f64,
}

impl Affine {
    pub fn add_term(&mut self, var: VarRef, w: f64) {
        if w == 0.0 {
            return;
        }
        let slot = self.terms.entry(var).or_insert(0.0);
        *slot += w;
        if *slot == 0.0 {
            self.terms.remove(&var);
        }
    }

    pub fn add_scaled(&mut self, other: &Affine, s: f64) {
        if s == 0.0 {
            return;
        }
        for (&v, &w) in &other.terms {
            self.add_term(v, w * s);
        }
        self.constant += other.constant * s;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant == 0.0
    }
}

type Entry = BTreeMap<Exponent, Affine>;

#[derive(Debug, Clone)]
pub(crate) struct AffMatrix {
    nvars: usize,
    rows: usize,
    cols: usize,
    entries: Vec<Entry>,
}

impl AffMatrix {
    pub fn zeros(nvars: usize, rows: usize, cols: usize) -> Self {
        Self {
            nvars,
            rows,
            cols,
            entries: vec![Entry::new(); rows * cols],
        }
    }

    /// `Σ_i basis_i · X_i` with `X_i` the decision block `block(i)`.
    pub fn decision(
        basis: &MonomialBasis,
        block: impl Fn(usize) -> BlockId,
        rows: usize,
        cols: usize,
        symmetric: bool,
    ) -> Self {
        let mut out = Self::zeros(basis.nvars(), rows, cols);
        for (i, e) in basis.iter().enumerate() {
            let b = block(i);
            for r in 0..rows {
                for c in 0..cols {
                    let var = if symmetric {
                        VarRef::sym(b, r, c)
                    } else {
                        VarRef::new(b, r, c)
                    };
                    let mut aff = Affine::default();
                    aff.add_term(var, 1.0);
                    out.entry_mut(r, c).insert(e.clone(), aff);
                }
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> &Entry {
        &self.entries[r * self.cols + c]
    }

    fn entry_mut(&mut self, r: usize, c: usize) -> &mut Entry {
        &mut self.entries[r * self.cols + c]
    }

    fn accumulate(&mut self, r: usize, c: usize, e: Exponent, aff: &Affine, s: f64) {
        let entry = self.entry_mut(r, c);
        let slot = entry.entry(e.clone()).or_default();
        slot.add_scaled(aff, s);
        if slot.is_zero() {
            entry.remove(&e);
        }
    }

    /// `known · self` for a numeric polynomial matrix on the left.
    pub fn left_mul(&self, known: &PolyMatrix) -> Self {
        assert_eq!(known.cols(), self.rows, "left_mul shape");
        let mut out = Self::zeros(self.nvars, known.rows(), self.cols);
        for (ek, mk) in known.terms() {
            for r in 0..known.rows() {
                for s in 0..self.rows {
                    let w = mk[(r, s)];
                    if w == 0.0 {
                        continue;
                    }
                    for c in 0..self.cols {
                        for (ea, aff) in self.entry(s, c) {
                            out.accumulate(r, c, ek.mul(ea), aff, w);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.nvars, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.entry_mut(c, r) = self.entry(r, c).clone();
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &AffMatrix, s: f64) {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "add shape"
        );
        for r in 0..self.rows {
            for c in 0..self.cols {
                for (e, aff) in other.entry(r, c) {
                    self.accumulate(r, c, e.clone(), aff, s);
                }
            }
        }
    }

    /// Adds `c · I` to the constant coefficient.
    pub fn add_identity(&mut self, c: f64) {
        let zero = Exponent::zero(self.nvars);
        let shift = Affine {
            terms: BTreeMap::new(),
            constant: c,
        };
        for i in 0..self.rows.min(self.cols) {
            self.accumulate(i, i, zero.clone(), &shift, 1.0);
        }
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zeros(self.nvars, self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                for (e, aff) in self.entry(r, c) {
                    if let Some((factor, de)) = e.derivative(var) {
                        out.accumulate(r, c, de, aff, factor);
                    }
                }
            }
        }
        out
    }

    pub fn mul_poly(&self, f: &Polynomial) -> Self {
        let mut out = Self::zeros(self.nvars, self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                for (e, aff) in self.entry(r, c) {
                    for (ef, w) in f.terms() {
                        out.accumulate(r, c, e.mul(ef), aff, w);
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Entry::is_empty)
    }

    pub fn degree(&self) -> u32 {
        self.entries
            .iter()
            .flat_map(|e| e.keys())
            .map(Exponent::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn variables(&self) -> Vec<usize> {
        let mut present = vec![false; self.nvars];
        for e in self.entries.iter().flat_map(|e| e.keys()) {
            for v in e.support() {
                present[v] = true;
            }
        }
        (0..self.nvars).filter(|&v| present[v]).collect()
    }
}
