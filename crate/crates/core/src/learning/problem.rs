use nalgebra::{DMatrix, DVector};

use super::data::Dataset;
use crate::conic::{ConeSolution, SolverConfig};
use crate::decision::{LinearEquality, Term, VarRef};
use crate::polynomial::{basis, basis_over, MonomialBasis, PolyMatrix, SystemDef};
use crate::rng::SplitMix64;
use crate::sos::{Epsilons, GramConstraintSet};
use crate::{Error, Result};

/// Polynomial degrees of `K`, `F` and `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degrees {
    pub d_k: u32,
    pub d_f: u32,
    pub d_p: u32,
}

impl Degrees {
    /// Requires `d_F ≥ d_K + d_P` so every product `K_i P_j` has a slot in `F`.
    pub fn new(d_k: u32, d_f: u32, d_p: u32) -> Result<Self> {
        if d_f < d_k + d_p {
            return Err(Error::DegreeShortfall {
                d_f,
                required: d_k + d_p,
            });
        }
        Ok(Self { d_k, d_f, d_p })
    }

    /// `d_K = d_F − d_P`, the largest controller degree `F` can absorb.
    pub fn from_factors(d_f: u32, d_p: u32) -> Result<Self> {
        if d_p > d_f {
            return Err(Error::DegreeShortfall { d_f, required: d_p });
        }
        Self::new(d_f - d_p, d_f, d_p)
    }
}

/// For each `k`, the pairs `(i, j)` with `K-basis_i · P-basis_j = F-basis_k`.
pub fn index_sets(
    degrees: Degrees,
    nvars: usize,
    reduced_vars: &[usize],
) -> Result<Vec<Vec<(usize, usize)>>> {
    let degrees = Degrees::new(degrees.d_k, degrees.d_f, degrees.d_p)?;
    let kb = basis(nvars, degrees.d_k);
    let pb = basis_over(nvars, reduced_vars, degrees.d_p);
    let fb = basis(nvars, degrees.d_f);
    let mut sets = vec![Vec::new(); fb.len()];
    for (i, ek) in kb.iter().enumerate() {
        for (j, ep) in pb.iter().enumerate() {
            let k = fb
                .index_of(&ek.mul(ep))
                .expect("degree check guarantees every product lies in the F basis");
            sets[k].push((i, j));
        }
    }
    Ok(sets)
}

/// `{F_i}`, `{P_i}` and the Gram matrices certifying them.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedFactors {
    pub f: Vec<DMatrix<f64>>,
    pub p: Vec<DMatrix<f64>>,
    pub q1: DMatrix<f64>,
    pub q2: DMatrix<f64>,
}

impl CertifiedFactors {
    /// Block values in constraint-set order.
    pub fn to_values(&self) -> Vec<DMatrix<f64>> {
        let mut v: Vec<DMatrix<f64>> = self.p.iter().chain(&self.f).cloned().collect();
        v.push(self.q1.clone());
        v.push(self.q2.clone());
        v
    }

    pub(crate) fn from_values(np: usize, nf: usize, values: &[DMatrix<f64>]) -> Self {
        Self {
            p: values[..np].to_vec(),
            f: values[np..np + nf].to_vec(),
            q1: values[np + nf].clone(),
            q2: values[np + nf + 1].clone(),
        }
    }
}

/// Everything fixed for one system and degree choice: bases, index sets and
/// the compiled certificate constraints.
#[derive(Debug, Clone)]
pub struct LearningProblem {
    sys: SystemDef,
    degrees: Degrees,
    gcs: GramConstraintSet,
    k_basis: MonomialBasis,
    index_sets: Vec<Vec<(usize, usize)>>,
    solver: SolverConfig,
}

/// Subproblem solutions with a primal residual above this are failures even
/// when the solver stopped at its iteration cap.
pub const ACCEPT_RESIDUAL: f64 = 1e-6;

impl LearningProblem {
    pub fn new(sys: SystemDef, degrees: Degrees, eps: Epsilons) -> Result<Self> {
        let sets = index_sets(degrees, sys.n(), sys.reduced_vars())?;
        let gcs = GramConstraintSet::compile(&sys, degrees.d_f, degrees.d_p, eps)?;
        Ok(Self {
            k_basis: basis(sys.n(), degrees.d_k),
            sys,
            degrees,
            gcs,
            index_sets: sets,
            solver: SolverConfig::default(),
        })
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn sys(&self) -> &SystemDef {
        &self.sys
    }

    pub fn degrees(&self) -> Degrees {
        self.degrees
    }

    pub fn gcs(&self) -> &GramConstraintSet {
        &self.gcs
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn k_basis(&self) -> &MonomialBasis {
        &self.k_basis
    }

    pub fn f_basis(&self) -> &MonomialBasis {
        self.gcs.layout().f_basis()
    }

    pub fn p_basis(&self) -> &MonomialBasis {
        self.gcs.layout().p_basis()
    }

    pub fn index_sets(&self) -> &[Vec<(usize, usize)>] {
        &self.index_sets
    }

    pub fn k_matrix(&self, k: &[DMatrix<f64>]) -> Result<PolyMatrix> {
        PolyMatrix::from_coefficients(&self.k_basis, k)
    }

    pub fn f_matrix(&self, cf: &CertifiedFactors) -> Result<PolyMatrix> {
        PolyMatrix::from_coefficients(self.f_basis(), &cf.f)
    }

    pub fn p_matrix(&self, cf: &CertifiedFactors) -> Result<PolyMatrix> {
        PolyMatrix::from_coefficients(self.p_basis(), &cf.p)
    }

    /// `Σ_{(i,j)∈E[k]} K_i P_j` for every `k`.
    pub fn products(&self, k: &[DMatrix<f64>], p: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let (m, pd) = (self.sys.m(), self.sys.p());
        self.index_sets
            .iter()
            .map(|set| {
                let mut acc = DMatrix::zeros(m, pd);
                for &(i, j) in set {
                    acc += &k[i] * &p[j];
                }
                acc
            })
            .collect()
    }

    /// Linear forms `F_k − Σ_{E[k]} K_i P_j`, one per `(k, row, col)`, in the
    /// decision variables for fixed `{K_i}`.
    pub(crate) fn coupling_terms(
        &self,
        k: &[DMatrix<f64>],
    ) -> Vec<(usize, usize, usize, Vec<Term>)> {
        let layout = self.gcs.layout();
        let (m, pd) = (self.sys.m(), self.sys.p());
        let mut out = Vec::new();
        for (kidx, set) in self.index_sets.iter().enumerate() {
            for r in 0..m {
                for c in 0..pd {
                    let mut terms = vec![Term {
                        var: VarRef::new(layout.f_block(kidx), r, c),
                        weight: 1.0,
                    }];
                    for &(i, j) in set {
                        for s in 0..pd {
                            let w = k[i][(r, s)];
                            if w != 0.0 {
                                terms.push(Term {
                                    var: VarRef::sym(layout.p_block(j), s, c),
                                    weight: -w,
                                });
                            }
                        }
                    }
                    out.push((kidx, r, c, terms));
                }
            }
        }
        out
    }

    /// Searches for certified factors with `K·P = F` exactly, i.e. a
    /// certificate for the given gain coefficients.
    pub fn certify_gain(&self, k: &[DMatrix<f64>]) -> Result<CertifiedFactors> {
        let mut cone = self.gcs.feasibility_problem();
        for (_, _, _, lhs) in self.coupling_terms(k) {
            cone.add_equality(LinearEquality {
                lhs,
                rhs: Vec::new(),
                constant: 0.0,
            });
        }
        let sol = crate::conic::solve(&cone, &self.solver)?;
        self.accept(sol, 0)
    }

    /// Every coefficient entry drawn uniformly from `[−h, h]`; symmetric
    /// blocks draw their upper triangle and mirror it.
    pub(crate) fn random_init(
        &self,
        rng: &mut SplitMix64,
        h: f64,
    ) -> (Vec<DMatrix<f64>>, CertifiedFactors) {
        let (m, pd) = (self.sys.m(), self.sys.p());
        let free = |n: usize, rng: &mut SplitMix64| -> Vec<DMatrix<f64>> {
            (0..n)
                .map(|_| DMatrix::from_fn(m, pd, |_, _| rng.uniform(-h, h)))
                .collect()
        };
        let k = free(self.k_basis.len(), rng);
        let mut p = Vec::with_capacity(self.p_basis().len());
        for _ in 0..self.p_basis().len() {
            let mut s = DMatrix::zeros(pd, pd);
            for r in 0..pd {
                for c in r..pd {
                    let v = rng.uniform(-h, h);
                    s[(r, c)] = v;
                    s[(c, r)] = v;
                }
            }
            p.push(s);
        }
        let f = free(self.f_basis().len(), rng);
        let q1 = DMatrix::zeros(self.gcs.layout().q1_dim(), self.gcs.layout().q1_dim());
        let q2 = DMatrix::zeros(self.gcs.layout().q2_dim(), self.gcs.layout().q2_dim());
        (k, CertifiedFactors { f, p, q1, q2 })
    }

    pub(crate) fn accept(&self, sol: ConeSolution, iteration: usize) -> Result<CertifiedFactors> {
        if !sol.is_solved() && sol.primal_residual > ACCEPT_RESIDUAL {
            return Err(Error::Subproblem {
                iteration,
                status: sol.status,
                primal_residual: sol.primal_residual,
                dual_residual: sol.dual_residual,
            });
        }
        Ok(CertifiedFactors::from_values(
            self.p_basis().len(),
            self.f_basis().len(),
            &sol.values,
        ))
    }
}

/// Basis values at each datapoint, precomputed once per dataset.
#[derive(Debug, Clone)]
pub struct Features {
    pub z: Vec<DVector<f64>>,
    pub k: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub inputs: Vec<DVector<f64>>,
}

impl Features {
    pub fn new(problem: &LearningProblem, data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let sys = problem.sys();
        let mut out = Self {
            z: Vec::with_capacity(data.len()),
            k: Vec::with_capacity(data.len()),
            f: Vec::with_capacity(data.len()),
            p: Vec::with_capacity(data.len()),
            inputs: data.inputs.clone(),
        };
        for (x, u) in data.states.iter().zip(&data.inputs) {
            let x = x.as_slice();
            sys.check_state(x)?;
            if u.len() != sys.m() {
                return Err(Error::DimensionMismatch {
                    expected: sys.m(),
                    got: u.len(),
                });
            }
            out.z.push(sys.eval_z(x));
            out.k.push(problem.k_basis().eval(x));
            out.f.push(problem.f_basis().eval(x));
            out.p.push(problem.p_basis().eval(x));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Loss of the polynomial gain with coefficients `k`.
    pub fn loss_k(&self, k: &[DMatrix<f64>]) -> f64 {
        let mut total = 0.0;
        for s in 0..self.len() {
            let mut u = -self.inputs[s].clone();
            for (kv, ki) in self.k[s].iter().zip(k) {
                u += ki * &self.z[s] * *kv;
            }
            total += u.norm_squared();
        }
        total / self.len() as f64
    }

    pub(crate) fn eval_f(&self, s: usize, f: &[DMatrix<f64>]) -> DMatrix<f64> {
        weighted_sum(&self.f[s], f)
    }

    pub(crate) fn eval_p(&self, s: usize, p: &[DMatrix<f64>]) -> DMatrix<f64> {
        weighted_sum(&self.p[s], p)
    }

    /// Loss of `K = F P⁻¹`; `None` if `P` is singular at some datapoint.
    pub fn loss_fp(&self, f: &[DMatrix<f64>], p: &[DMatrix<f64>]) -> Option<f64> {
        let mut total = 0.0;
        for s in 0..self.len() {
            let y = self.eval_p(s, p).lu().solve(&self.z[s])?;
            let r = self.eval_f(s, f) * y - &self.inputs[s];
            total += r.norm_squared();
        }
        Some(total / self.len() as f64)
    }
}

fn weighted_sum(w: &[f64], mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (wi, mi) in w.iter().zip(mats) {
        acc += mi * *wi;
    }
    acc
}
