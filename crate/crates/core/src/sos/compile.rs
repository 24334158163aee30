use std::collections::{BTreeMap, BTreeSet};

use super::affine::{AffMatrix, Affine};
use crate::decision::{
    dump_standard_form, Block, BlockId, BlockKind, LinearEquality, Term, VarRef,
};
use crate::polynomial::{basis_over, Exponent, MonomialBasis, SystemDef};
use crate::{Error, Result};

/// Strict-positivity margins `ε₁` (for `P`) and `ε₂` (for the stability
/// matrix).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilons {
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for Epsilons {
    fn default() -> Self {
        Self {
            eps1: 1e-3,
            eps2: 1e-4,
        }
    }
}

/// Vector `z(x) ⊗ v` used in the Gram form `[z⊗v]ᵀ Q [z⊗v]`.
///
/// Entry `s·p + a` of the Kronecker vector is `z_s(x) · v_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBasis {
    z: Vec<Exponent>,
    block_dim: usize,
}

impl GramBasis {
    pub fn z(&self) -> &[Exponent] {
        &self.z
    }

    /// Dimension `p` of `v`.
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// `(z index, v index)` of every Kronecker entry, in order.
    pub fn kron_entries(&self) -> Vec<(usize, usize)> {
        (0..self.z.len())
            .flat_map(|s| (0..self.block_dim).map(move |a| (s, a)))
            .collect()
    }

    pub fn kron_dim(&self) -> usize {
        self.z.len() * self.block_dim
    }

    /// `z(x) ⊗ v` evaluated numerically.
    pub fn eval_kron(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.z
            .iter()
            .flat_map(|e| {
                let zs = e.eval(x);
                v.iter().map(move |va| zs * va)
            })
            .collect()
    }
}

/// All monomials of degree `<= ⌈target_degree / 2⌉` in `variables`.
pub fn choose_gram_basis(
    target_degree: u32,
    variables: &[usize],
    nvars: usize,
    p: usize,
) -> GramBasis {
    let half = target_degree.div_ceil(2);
    GramBasis {
        z: basis_over(nvars, variables, half).entries().to_vec(),
        block_dim: p,
    }
}

/// Block ids of the decision variables: `{P_i}` in basis order, then
/// `{F_i}`, then `Q₁`, then `Q₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionLayout {
    p_basis: MonomialBasis,
    f_basis: MonomialBasis,
    p: usize,
    m: usize,
    q1_dim: usize,
    q2_dim: usize,
}

impl DecisionLayout {
    pub fn new(sys: &SystemDef, d_f: u32, d_p: u32) -> Self {
        Self {
            p_basis: basis_over(sys.n(), sys.reduced_vars(), d_p),
            f_basis: basis_over(sys.n(), &(0..sys.n()).collect::<Vec<_>>(), d_f),
            p: sys.p(),
            m: sys.m(),
            q1_dim: 0,
            q2_dim: 0,
        }
    }

    pub fn p_basis(&self) -> &MonomialBasis {
        &self.p_basis
    }

    pub fn f_basis(&self) -> &MonomialBasis {
        &self.f_basis
    }

    pub fn p_block(&self, i: usize) -> BlockId {
        BlockId(i)
    }

    pub fn f_block(&self, i: usize) -> BlockId {
        BlockId(self.p_basis.len() + i)
    }

    pub fn q1_block(&self) -> BlockId {
        BlockId(self.p_basis.len() + self.f_basis.len())
    }

    pub fn q2_block(&self) -> BlockId {
        BlockId(self.p_basis.len() + self.f_basis.len() + 1)
    }

    pub fn q1_dim(&self) -> usize {
        self.q1_dim
    }

    pub fn q2_dim(&self) -> usize {
        self.q2_dim
    }

    pub fn blocks(&self) -> Vec<Block> {
        let mut blocks = Vec::new();
        for (i, e) in self.p_basis.iter().enumerate() {
            blocks.push(Block {
                kind: BlockKind::Symmetric { dim: self.p },
                label: format!("P{i}[{e}]"),
            });
        }
        for (i, e) in self.f_basis.iter().enumerate() {
            blocks.push(Block {
                kind: BlockKind::Free {
                    rows: self.m,
                    cols: self.p,
                },
                label: format!("F{i}[{e}]"),
            });
        }
        blocks.push(Block {
            kind: BlockKind::Psd { dim: self.q1_dim },
            label: "Q1".into(),
        });
        blocks.push(Block {
            kind: BlockKind::Nsd { dim: self.q2_dim },
            label: "Q2".into(),
        });
        blocks
    }

    pub(crate) fn p_matrix(&self) -> AffMatrix {
        AffMatrix::decision(&self.p_basis, |i| self.p_block(i), self.p, self.p, true)
    }

    pub(crate) fn f_matrix(&self) -> AffMatrix {
        AffMatrix::decision(&self.f_basis, |i| self.f_block(i), self.m, self.p, false)
    }
}

/// Monomial `x^α v_a v_b` with `a <= b`.
type FormKey = (Exponent, usize, usize);

/// Coefficients of `vᵀ H(x) v` keyed by monomial in `(x, v)`.
fn quadratic_form(h: &AffMatrix) -> BTreeMap<FormKey, Affine> {
    let mut out: BTreeMap<FormKey, Affine> = BTreeMap::new();
    for a in 0..h.rows() {
        for b in 0..h.cols() {
            for (e, aff) in h.entry(a, b) {
                let key = (e.clone(), a.min(b), a.max(b));
                out.entry(key).or_default().add_scaled(aff, 1.0);
            }
        }
    }
    out.retain(|_, aff| !aff.is_zero());
    out
}

/// Coefficients of `[z⊗v]ᵀ Q [z⊗v]` as weighted upper-triangle handles.
fn gram_form(gb: &GramBasis, q: BlockId) -> BTreeMap<FormKey, Vec<Term>> {
    let kron = gb.kron_entries();
    let mut out: BTreeMap<FormKey, Vec<Term>> = BTreeMap::new();
    for (i, &(s, a)) in kron.iter().enumerate() {
        for (j, &(t, b)) in kron.iter().enumerate().skip(i) {
            let key = (gb.z[s].mul(&gb.z[t]), a.min(b), a.max(b));
            out.entry(key).or_default().push(Term {
                var: VarRef::sym(q, i, j),
                weight: if i == j { 1.0 } else { 2.0 },
            });
        }
    }
    out
}

/// Matches coefficients of `vᵀHv` and the Gram form monomial by monomial.
fn emit(h: &AffMatrix, gb: &GramBasis, q: BlockId) -> Result<Vec<LinearEquality>> {
    let lhs = quadratic_form(h);
    let rhs = gram_form(gb, q);
    if let Some(((e, a, b), _)) = lhs.iter().find(|(k, _)| !rhs.contains_key(*k)) {
        return Err(Error::GramBasisTooSmall(format!(
            "{e}*v{}*v{}",
            a + 1,
            b + 1
        )));
    }
    let keys: BTreeSet<&FormKey> = lhs.keys().chain(rhs.keys()).collect();
    Ok(keys
        .into_iter()
        .map(|key| {
            let aff = lhs.get(key).cloned().unwrap_or_default();
            LinearEquality {
                lhs: aff
                    .terms
                    .iter()
                    .map(|(&var, &weight)| Term { var, weight })
                    .collect(),
                rhs: rhs[key].clone(),
                constant: aff.constant,
            }
        })
        .collect())
}

/// `P(x̃) − ε₁I` as an affine polynomial matrix.
pub(crate) fn p_form(layout: &DecisionLayout, eps1: f64) -> AffMatrix {
    let mut h = layout.p_matrix();
    h.add_identity(-eps1);
    h
}

/// `PAᵀMᵀ + MAP + FᵀBᵀMᵀ + MBF − Σ_{j∈J} ∂P/∂x_j (A_j Z) + ε₂I`.
pub(crate) fn stability_form(
    sys: &SystemDef,
    layout: &DecisionLayout,
    eps2: f64,
) -> Result<AffMatrix> {
    let m = sys.jacobian();
    let ma = m.matmul(sys.a())?;
    let mb = m.matmul(sys.b())?;
    let p = layout.p_matrix();
    let f = layout.f_matrix();

    let map = p.left_mul(&ma);
    let mbf = f.left_mul(&mb);
    let mut h = map.transpose();
    h.add_scaled(&map, 1.0);
    h.add_scaled(&mbf.transpose(), 1.0);
    h.add_scaled(&mbf, 1.0);
    for &j in sys.zero_rows() {
        let drift = sys.a().row(j).matmul(sys.z_column())?.entry(0, 0);
        let dp = p.partial(j);
        if dp.is_zero() || drift.is_zero() {
            continue;
        }
        h.add_scaled(&dp.mul_poly(&drift), -1.0);
    }
    h.add_identity(eps2);
    Ok(h)
}

/// Equalities for `vᵀ[P(x̃) − ε₁I]v = [z₁⊗v]ᵀQ₁[z₁⊗v]`.
pub fn compile_p_constraint(
    layout: &DecisionLayout,
    eps1: f64,
    gb: &GramBasis,
) -> Result<Vec<LinearEquality>> {
    check_block_dim(gb, layout.p)?;
    if eps1 <= 0.0 {
        return Err(Error::InvalidConfig("eps1 must be positive".into()));
    }
    emit(&p_form(layout, eps1), gb, layout.q1_block())
}

/// Equalities for the stability condition against `[z₂⊗v]ᵀQ₂[z₂⊗v]`.
pub fn compile_stability_constraint(
    sys: &SystemDef,
    layout: &DecisionLayout,
    eps2: f64,
    gb: &GramBasis,
) -> Result<Vec<LinearEquality>> {
    check_block_dim(gb, layout.p)?;
    if eps2 <= 0.0 {
        return Err(Error::InvalidConfig("eps2 must be positive".into()));
    }
    emit(&stability_form(sys, layout, eps2)?, gb, layout.q2_block())
}

fn check_block_dim(gb: &GramBasis, p: usize) -> Result<()> {
    if gb.block_dim != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: gb.block_dim,
        });
    }
    Ok(())
}

/// The complete compiled certificate conditions for one system and degree
/// choice.
#[derive(Debug, Clone)]
pub struct GramConstraintSet {
    layout: DecisionLayout,
    z1: GramBasis,
    z2: GramBasis,
    p_equalities: Vec<LinearEquality>,
    stability_equalities: Vec<LinearEquality>,
    eps: Epsilons,
}

impl GramConstraintSet {
    /// Compiles both conditions, sizing each Gram basis from the degree and
    /// variables that actually occur in its polynomial matrix.
    pub fn compile(sys: &SystemDef, d_f: u32, d_p: u32, eps: Epsilons) -> Result<Self> {
        let mut layout = DecisionLayout::new(sys, d_f, d_p);
        let h1 = p_form(&layout, eps.eps1);
        let h2 = stability_form(sys, &layout, eps.eps2)?;
        let z1 = choose_gram_basis(h1.degree(), &h1.variables(), sys.n(), sys.p());
        let z2 = choose_gram_basis(h2.degree(), &h2.variables(), sys.n(), sys.p());
        layout.q1_dim = z1.kron_dim();
        layout.q2_dim = z2.kron_dim();
        let p_equalities = compile_p_constraint(&layout, eps.eps1, &z1)?;
        let stability_equalities = compile_stability_constraint(sys, &layout, eps.eps2, &z2)?;
        Ok(Self {
            layout,
            z1,
            z2,
            p_equalities,
            stability_equalities,
            eps,
        })
    }

    pub fn layout(&self) -> &DecisionLayout {
        &self.layout
    }

    pub fn z1(&self) -> &GramBasis {
        &self.z1
    }

    pub fn z2(&self) -> &GramBasis {
        &self.z2
    }

    pub fn eps(&self) -> Epsilons {
        self.eps
    }

    pub fn p_equalities(&self) -> &[LinearEquality] {
        &self.p_equalities
    }

    pub fn stability_equalities(&self) -> &[LinearEquality] {
        &self.stability_equalities
    }

    pub fn equalities(&self) -> impl Iterator<Item = &LinearEquality> {
        self.p_equalities.iter().chain(&self.stability_equalities)
    }

    pub fn num_equalities(&self) -> usize {
        self.p_equalities.len() + self.stability_equalities.len()
    }

    pub fn blocks(&self) -> Vec<Block> {
        self.layout.blocks()
    }

    /// Standard-form text dump.
    pub fn dump(&self) -> String {
        let title = format!(
            "gram constraint set: eps1 {:?} eps2 {:?}, |z1| = {}, |z2| = {}",
            self.eps.eps1,
            self.eps.eps2,
            self.z1.z.len(),
            self.z2.z.len()
        );
        let eqs: Vec<LinearEquality> = self.equalities().cloned().collect();
        dump_standard_form(&title, &self.blocks(), &eqs)
    }
}
