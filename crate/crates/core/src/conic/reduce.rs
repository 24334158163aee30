//! Facial reduction for cone blocks with structurally zero diagonals.
//!
//! An equality `Σ wₖ Xₖₖ = 0` whose terms are all diagonal entries of cone
//! blocks, with every `wₖ Xₖₖ` of the same sign on the cone, forces each of
//! those diagonals to zero, and a semidefinite matrix with a zero diagonal
//! entry has that whole row and column zero. Such problems have no strictly
//! feasible point, which stalls operator splitting; dropping the rows and
//! columns gives an equivalent smaller problem that usually has one.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::problem::{ConeProblem, ResidualRow};
use crate::decision::{Block, BlockKind, LinearEquality, Term, VarRef};

/// Kept indices of every cone block that lost rows; `None` for untouched
/// blocks.
#[derive(Debug, Clone)]
pub(crate) struct Reduction {
    kept: Vec<Option<Vec<usize>>>,
}

impl Reduction {
    /// Finds forced-zero diagonals by repeated sweeps over the equalities.
    /// Returns `None` when nothing can be removed.
    pub fn find(problem: &ConeProblem) -> Option<Self> {
        let blocks = problem.blocks();
        let mut zero: Vec<Vec<bool>> = blocks
            .iter()
            .map(|b| {
                vec![
                    false;
                    if b.kind.is_cone() {
                        b.kind.shape().0
                    } else {
                        0
                    }
                ]
            })
            .collect();
        let is_zero = |zero: &[Vec<bool>], v: &VarRef| {
            let z = &zero[v.block.0];
            !z.is_empty() && (z[v.row] || z[v.col])
        };
        let mut changed = true;
        let mut any = false;
        while changed {
            changed = false;
            for eq in problem.equalities() {
                let (terms, b) = eq.normalized();
                if b != 0.0 {
                    continue;
                }
                let mut merged: BTreeMap<VarRef, f64> = BTreeMap::new();
                for t in &terms {
                    if !is_zero(&zero, &t.var) {
                        *merged.entry(canonical(blocks, t.var)).or_insert(0.0) += t.weight;
                    }
                }
                merged.retain(|_, w| *w != 0.0);
                if merged.is_empty() {
                    continue;
                }
                let mut sign = 0.0;
                let forcing = merged.iter().all(|(v, &w)| {
                    let orient = match blocks[v.block.0].kind {
                        BlockKind::Psd { .. } => 1.0,
                        BlockKind::Nsd { .. } => -1.0,
                        _ => return false,
                    };
                    if v.row != v.col {
                        return false;
                    }
                    let s = (w * orient).signum();
                    if sign == 0.0 {
                        sign = s;
                    }
                    s == sign
                });
                if forcing {
                    for v in merged.keys() {
                        zero[v.block.0][v.row] = true;
                    }
                    changed = true;
                    any = true;
                }
            }
        }
        if !any {
            return None;
        }
        let kept = zero
            .iter()
            .map(|z| {
                z.iter()
                    .any(|&f| f)
                    .then(|| (0..z.len()).filter(|&i| !z[i]).collect())
            })
            .collect();
        Some(Self { kept })
    }

    /// The equivalent problem over the kept rows and columns.
    pub fn reduce(&self, problem: &ConeProblem) -> ConeProblem {
        let blocks: Vec<Block> = problem
            .blocks()
            .iter()
            .zip(&self.kept)
            .map(|(b, kept)| match (kept, b.kind) {
                (Some(k), BlockKind::Psd { .. }) => Block {
                    kind: BlockKind::Psd { dim: k.len() },
                    label: b.label.clone(),
                },
                (Some(k), BlockKind::Nsd { .. }) => Block {
                    kind: BlockKind::Nsd { dim: k.len() },
                    label: b.label.clone(),
                },
                _ => b.clone(),
            })
            .collect();
        let mut out = ConeProblem::new(blocks);
        for eq in problem.equalities() {
            out.add_equality(LinearEquality {
                lhs: self.map_terms(&eq.lhs),
                rhs: self.map_terms(&eq.rhs),
                constant: eq.constant,
            });
        }
        for row in problem.residuals() {
            out.add_residual(ResidualRow {
                terms: self.map_terms(&row.terms),
                target: row.target,
            });
        }
        for t in self.map_terms(problem.linear()) {
            out.add_linear(t);
        }
        out
    }

    fn map_terms(&self, terms: &[Term]) -> Vec<Term> {
        terms
            .iter()
            .filter_map(|t| {
                let var = match &self.kept[t.var.block.0] {
                    None => t.var,
                    Some(k) => {
                        let r = k.binary_search(&t.var.row).ok()?;
                        let c = k.binary_search(&t.var.col).ok()?;
                        VarRef::new(t.var.block, r, c)
                    }
                };
                Some(Term {
                    var,
                    weight: t.weight,
                })
            })
            .collect()
    }

    /// Restricts full block values to the kept rows and columns.
    pub fn restrict(&self, values: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        values
            .iter()
            .zip(&self.kept)
            .map(|(m, kept)| match kept {
                None => m.clone(),
                Some(k) => m.select_rows(k).select_columns(k),
            })
            .collect()
    }

    /// Embeds reduced block values back into full size with zeros.
    pub fn expand(&self, original: &[Block], values: Vec<DMatrix<f64>>) -> Vec<DMatrix<f64>> {
        values
            .into_iter()
            .zip(&self.kept)
            .zip(original)
            .map(|((m, kept), b)| match kept {
                None => m,
                Some(k) => {
                    let d = b.kind.shape().0;
                    let mut full = DMatrix::zeros(d, d);
                    for (i, &ri) in k.iter().enumerate() {
                        for (j, &cj) in k.iter().enumerate() {
                            full[(ri, cj)] = m[(i, j)];
                        }
                    }
                    full
                }
            })
            .collect()
    }
}

fn canonical(blocks: &[Block], v: VarRef) -> VarRef {
    if blocks[v.block.0].kind.is_symmetric() {
        VarRef::sym(v.block, v.row, v.col)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::BlockId;

    #[test]
    fn zero_diagonal_removes_row_and_column() {
        let q = BlockId(0);
        let mut p = ConeProblem::new(vec![Block {
            kind: BlockKind::Psd { dim: 3 },
            label: "Q".into(),
        }]);
        p.add_equality(LinearEquality {
            lhs: vec![],
            rhs: vec![Term {
                var: VarRef::new(q, 1, 1),
                weight: 1.0,
            }],
            constant: 0.0,
        });
        p.add_equality(LinearEquality {
            lhs: vec![
                Term {
                    var: VarRef::new(q, 0, 1),
                    weight: 2.0,
                },
                Term {
                    var: VarRef::new(q, 2, 2),
                    weight: 1.0,
                },
            ],
            rhs: vec![],
            constant: -1.0,
        });
        let red = Reduction::find(&p).unwrap();
        let small = red.reduce(&p);
        assert_eq!(small.blocks()[0].kind, BlockKind::Psd { dim: 2 });
        assert!(small.equalities()[0].rhs.is_empty());
        assert_eq!(small.equalities()[1].lhs.len(), 1);
        assert_eq!(small.equalities()[1].lhs[0].var, VarRef::new(q, 1, 1));
        let full = red.expand(p.blocks(), vec![DMatrix::from_element(2, 2, 1.0)]);
        assert_eq!(full[0].row(1).iter().copied().sum::<f64>(), 0.0);
        assert_eq!(full[0][(2, 0)], 1.0);
    }

    #[test]
    fn mixed_signs_do_not_force() {
        let q = BlockId(0);
        let mut p = ConeProblem::new(vec![Block {
            kind: BlockKind::Psd { dim: 2 },
            label: "Q".into(),
        }]);
        p.add_equality(LinearEquality {
            lhs: vec![Term {
                var: VarRef::new(q, 0, 0),
                weight: 1.0,
            }],
            rhs: vec![Term {
                var: VarRef::new(q, 1, 1),
                weight: 1.0,
            }],
            constant: 0.0,
        });
        assert!(Reduction::find(&p).is_none());
    }
}
