//! Decision-variable handles and scalar linear equalities shared by the
//! Gram compiler and the conic solver, plus their plain-text dump.
//!
//! Dump format, one record per line:
//!
//! ```text
//! # <title>
//! block <id> <free|sym|psd|nsd> <rows> <cols> <label>
//! eq <w>*b<id>[<r>,<c>] ... = <w>*b<id>[<r>,<c>] ... ; const <c>
//! ```
//!
//! An `eq` line states `Σ lhs + const = Σ rhs`. Weights use Rust's shortest
//! round-trip float formatting, so dumps are byte-reproducible.

use std::fmt::Write as _;

/// Index of a matrix block in a decision layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

/// What values a block may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Unconstrained `rows × cols` matrix.
    Free { rows: usize, cols: usize },
    /// Unconstrained symmetric matrix.
    Symmetric { dim: usize },
    /// Symmetric positive semidefinite.
    Psd { dim: usize },
    /// Symmetric negative semidefinite.
    Nsd { dim: usize },
}

impl BlockKind {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            BlockKind::Free { rows, cols } => (rows, cols),
            BlockKind::Symmetric { dim } | BlockKind::Psd { dim } | BlockKind::Nsd { dim } => {
                (dim, dim)
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, BlockKind::Free { .. })
    }

    pub fn is_cone(&self) -> bool {
        matches!(self, BlockKind::Psd { .. } | BlockKind::Nsd { .. })
    }

    /// Number of scalar unknowns (upper triangle for symmetric kinds).
    pub fn scalar_count(&self) -> usize {
        match *self {
            BlockKind::Free { rows, cols } => rows * cols,
            BlockKind::Symmetric { dim } | BlockKind::Psd { dim } | BlockKind::Nsd { dim } => {
                dim * (dim + 1) / 2
            }
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            BlockKind::Free { .. } => "free",
            BlockKind::Symmetric { .. } => "sym",
            BlockKind::Psd { .. } => "psd",
            BlockKind::Nsd { .. } => "nsd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub label: String,
}

/// Entry `(row, col)` of a block. For symmetric blocks handles are kept in
/// the upper triangle (`row <= col`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    pub block: BlockId,
    pub row: usize,
    pub col: usize,
}

impl VarRef {
    pub fn new(block: BlockId, row: usize, col: usize) -> Self {
        Self { block, row, col }
    }

    /// Handle into a symmetric block, folded into the upper triangle.
    pub fn sym(block: BlockId, row: usize, col: usize) -> Self {
        Self {
            block,
            row: row.min(col),
            col: row.max(col),
        }
    }
}

/// Weighted reference to one decision entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub var: VarRef,
    pub weight: f64,
}

/// `Σ lhs + constant = Σ rhs`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearEquality {
    pub lhs: Vec<Term>,
    pub rhs: Vec<Term>,
    pub constant: f64,
}

impl LinearEquality {
    /// Moves everything to one side: `Σ wᵢ vᵢ = b`.
    pub fn normalized(&self) -> (Vec<Term>, f64) {
        let mut terms = self.lhs.clone();
        terms.extend(self.rhs.iter().map(|t| Term {
            var: t.var,
            weight: -t.weight,
        }));
        (terms, -self.constant)
    }

    /// `Σ lhs + constant − Σ rhs` for an entry lookup.
    pub fn residual(&self, value: impl Fn(VarRef) -> f64) -> f64 {
        let lhs: f64 = self.lhs.iter().map(|t| t.weight * value(t.var)).sum();
        let rhs: f64 = self.rhs.iter().map(|t| t.weight * value(t.var)).sum();
        lhs + self.constant - rhs
    }
}

fn write_terms(out: &mut String, terms: &[Term]) {
    if terms.is_empty() {
        out.push_str(" 0");
    }
    for t in terms {
        let _ = write!(
            out,
            " {:?}*b{}[{},{}]",
            t.weight, t.var.block.0, t.var.row, t.var.col
        );
    }
}

/// Standard-form text dump of blocks and equalities.
pub fn dump_standard_form(title: &str, blocks: &[Block], equalities: &[LinearEquality]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    for (i, b) in blocks.iter().enumerate() {
        let (r, c) = b.kind.shape();
        let _ = writeln!(out, "block {i} {} {r} {c} {}", b.kind.tag(), b.label);
    }
    for eq in equalities {
        out.push_str("eq");
        write_terms(&mut out, &eq.lhs);
        out.push_str(" =");
        write_terms(&mut out, &eq.rhs);
        let _ = writeln!(out, " ; const {:?}", eq.constant);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_handles_fold_to_upper_triangle() {
        let a = VarRef::sym(BlockId(2), 3, 1);
        assert_eq!((a.row, a.col), (1, 3));
        assert_eq!(a, VarRef::sym(BlockId(2), 1, 3));
    }

    #[test]
    fn residual_and_normalization_agree() {
        let p = VarRef::new(BlockId(0), 0, 0);
        let q = VarRef::new(BlockId(1), 0, 0);
        let eq = LinearEquality {
            lhs: vec![Term {
                var: p,
                weight: 2.0,
            }],
            rhs: vec![Term {
                var: q,
                weight: 1.0,
            }],
            constant: -0.5,
        };
        let value = |v: VarRef| if v == p { 1.0 } else { 1.5 };
        assert_eq!(eq.residual(value), 0.0);
        let (terms, b) = eq.normalized();
        let lhs: f64 = terms.iter().map(|t| t.weight * value(t.var)).sum();
        assert_eq!(lhs, b);
    }

    #[test]
    fn dump_format() {
        let blocks = vec![
            Block {
                kind: BlockKind::Symmetric { dim: 1 },
                label: "P0".into(),
            },
            Block {
                kind: BlockKind::Psd { dim: 1 },
                label: "Q1".into(),
            },
        ];
        let eq = LinearEquality {
            lhs: vec![Term {
                var: VarRef::new(BlockId(0), 0, 0),
                weight: 1.0,
            }],
            rhs: vec![Term {
                var: VarRef::new(BlockId(1), 0, 0),
                weight: 1.0,
            }],
            constant: -0.001,
        };
        let text = dump_standard_form("scalar", &blocks, &[eq]);
        assert_eq!(
            text,
            "# scalar\nblock 0 sym 1 1 P0\nblock 1 psd 1 1 Q1\neq 1.0*b0[0,0] = 1.0*b1[0,0] ; const -0.001\n"
        );
    }
}
