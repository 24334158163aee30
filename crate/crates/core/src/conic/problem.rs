use nalgebra::{DMatrix, DVector};

use crate::decision::{dump_standard_form, Block, BlockKind, LinearEquality, Term, VarRef};
use crate::{Error, Result};

/// One squared residual `(Σ wᵢ vᵢ − target)²` of the least-squares objective.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualRow {
    pub terms: Vec<Term>,
    pub target: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConeProblem {
    blocks: Vec<Block>,
    equalities: Vec<LinearEquality>,
    residuals: Vec<ResidualRow>,
    linear: Vec<Term>,
}

impl ConeProblem {
    pub fn new(blocks: Vec<Block>) -> Self {
        Self {
            blocks,
            ..Self::default()
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn equalities(&self) -> &[LinearEquality] {
        &self.equalities
    }

    pub fn residuals(&self) -> &[ResidualRow] {
        &self.residuals
    }

    pub fn linear(&self) -> &[Term] {
        &self.linear
    }

    pub fn add_equality(&mut self, eq: LinearEquality) {
        self.equalities.push(eq);
    }

    pub fn add_equalities(&mut self, eqs: impl IntoIterator<Item = LinearEquality>) {
        self.equalities.extend(eqs);
    }

    pub fn add_residual(&mut self, row: ResidualRow) {
        self.residuals.push(row);
    }

    pub fn add_linear(&mut self, term: Term) {
        self.linear.push(term);
    }

    pub fn has_cones(&self) -> bool {
        self.blocks.iter().any(|b| b.kind.is_cone())
    }

    /// Plain-text standard-form dump (see [`crate::decision`]).
    pub fn dump(&self, title: &str) -> String {
        dump_standard_form(title, &self.blocks, &self.equalities)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidConfig("cone problem has no blocks".into()));
        }
        let check = |t: &Term| -> Result<()> {
            let b = self.blocks.get(t.var.block.0).ok_or_else(|| {
                Error::InvalidConfig(format!("reference to undeclared block {}", t.var.block.0))
            })?;
            let (r, c) = b.kind.shape();
            if t.var.row >= r || t.var.col >= c {
                return Err(Error::InvalidConfig(format!(
                    "entry ({}, {}) outside block {} of shape {r}x{c}",
                    t.var.row, t.var.col, t.var.block.0
                )));
            }
            Ok(())
        };
        for eq in &self.equalities {
            eq.lhs.iter().chain(&eq.rhs).try_for_each(check)?;
        }
        for row in &self.residuals {
            row.terms.iter().try_for_each(check)?;
        }
        self.linear.iter().try_for_each(check)
    }
}

/// Mapping between block entries and the flat internal vector.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub kinds: Vec<BlockKind>,
    pub offsets: Vec<usize>,
    pub len: usize,
}

impl Layout {
    pub fn new(blocks: &[Block]) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut len = 0;
        for b in blocks {
            offsets.push(len);
            len += b.kind.scalar_count();
        }
        Self {
            kinds: blocks.iter().map(|b| b.kind).collect(),
            offsets,
            len,
        }
    }

    /// Internal index and coefficient scale for a block entry: the entry's
    /// value equals `scale · v[index]`.
    pub fn locate(&self, var: VarRef) -> (usize, f64) {
        let off = self.offsets[var.block.0];
        match self.kinds[var.block.0] {
            BlockKind::Free { cols, .. } => (off + var.row * cols + var.col, 1.0),
            BlockKind::Symmetric { dim } | BlockKind::Psd { dim } | BlockKind::Nsd { dim } => {
                let (i, j) = (var.row.min(var.col), var.row.max(var.col));
                let idx = off + svec_index(dim, i, j);
                (
                    idx,
                    if i == j {
                        1.0
                    } else {
                        std::f64::consts::FRAC_1_SQRT_2
                    },
                )
            }
        }
    }

    /// Dense row for a list of terms.
    pub fn dense(&self, terms: &[Term]) -> DVector<f64> {
        let mut row = DVector::zeros(self.len);
        for t in terms {
            let (idx, scale) = self.locate(t.var);
            row[idx] += t.weight * scale;
        }
        row
    }

    pub fn unpack(&self, v: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.kinds
            .iter()
            .zip(&self.offsets)
            .map(|(kind, &off)| match *kind {
                BlockKind::Free { rows, cols } => {
                    DMatrix::from_row_slice(rows, cols, &v.as_slice()[off..off + rows * cols])
                }
                BlockKind::Symmetric { dim } | BlockKind::Psd { dim } | BlockKind::Nsd { dim } => {
                    svec_to_mat(dim, &v.as_slice()[off..off + dim * (dim + 1) / 2])
                }
            })
            .collect()
    }

    pub fn pack(&self, values: &[DMatrix<f64>]) -> Result<DVector<f64>> {
        if values.len() != self.kinds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.kinds.len(),
                got: values.len(),
            });
        }
        let mut v = DVector::zeros(self.len);
        for ((kind, &off), m) in self.kinds.iter().zip(&self.offsets).zip(values) {
            if m.shape() != kind.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "initial block of shape {:?}, expected {:?}",
                    m.shape(),
                    kind.shape()
                )));
            }
            match *kind {
                BlockKind::Free { rows, cols } => {
                    for r in 0..rows {
                        for c in 0..cols {
                            v[off + r * cols + c] = m[(r, c)];
                        }
                    }
                }
                BlockKind::Symmetric { dim } | BlockKind::Psd { dim } | BlockKind::Nsd { dim } => {
                    mat_to_svec(
                        dim,
                        m,
                        &mut v.as_mut_slice()[off..off + dim * (dim + 1) / 2],
                    );
                }
            }
        }
        Ok(v)
    }
}

pub(crate) fn svec_index(dim: usize, i: usize, j: usize) -> usize {
    // rows of the upper triangle laid out one after another
    i * dim - i * (i + 1) / 2 + j
}

pub(crate) fn svec_to_mat(dim: usize, s: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = s[svec_index(dim, i, j)];
            if i == j {
                m[(i, i)] = v;
            } else {
                let e = v * std::f64::consts::FRAC_1_SQRT_2;
                m[(i, j)] = e;
                m[(j, i)] = e;
            }
        }
    }
    m
}

pub(crate) fn mat_to_svec(dim: usize, m: &DMatrix<f64>, out: &mut [f64]) {
    for i in 0..dim {
        for j in i..dim {
            out[svec_index(dim, i, j)] = if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)]) * std::f64::consts::SQRT_2
            };
        }
    }
}
