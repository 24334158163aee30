use nalgebra::{DMatrix, DVector};

use super::polish::polish;
use super::problem::{mat_to_svec, svec_to_mat, ConeProblem, Layout};
use super::project::{nsd_project, psd_project};
use super::reduce::Reduction;
use crate::decision::BlockKind;
use crate::{Error, Result};

/// Rows whose residual norm after orthogonalization falls below this
/// (relative to the largest row) are treated as linearly dependent.
const DEPENDENT_ROW_TOL: f64 = 1e-10;
/// Residual-balancing check interval and trigger ratio.
const ADAPT_INTERVAL: usize = 25;
const ADAPT_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iters: usize,
    /// Over-relaxation factor in `[1, 2)`.
    pub over_relaxation: f64,
    /// Initial penalty parameter.
    pub penalty: f64,
    pub adaptive_penalty: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            max_iters: 20_000,
            over_relaxation: 1.6,
            penalty: 1.0,
            adaptive_penalty: true,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return Err(Error::InvalidConfig(
                "solver tolerances must be positive".into(),
            ));
        }
        if !(1.0..2.0).contains(&self.over_relaxation) {
            return Err(Error::InvalidConfig(
                "over-relaxation must lie in [1, 2)".into(),
            ));
        }
        if !(self.penalty > 0.0) {
            return Err(Error::InvalidConfig("penalty must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    MaxIters,
    /// Iteration budget exhausted with a large primal residual. Not a
    /// certificate of infeasibility.
    InfeasibleGuess,
}

#[derive(Debug, Clone)]
pub struct ConeSolution {
    /// Full matrix value of every block, in declaration order.
    pub values: Vec<DMatrix<f64>>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl ConeSolution {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }
}

pub fn solve(problem: &ConeProblem, cfg: &SolverConfig) -> Result<ConeSolution> {
    solve_with_start(problem, cfg, None)
}

/// Solves starting from the given block values (cone blocks are projected
/// before use).
pub fn solve_with_start(
    problem: &ConeProblem,
    cfg: &SolverConfig,
    start: Option<&[DMatrix<f64>]>,
) -> Result<ConeSolution> {
    problem.validate()?;
    cfg.validate()?;
    if let Some(red) = Reduction::find(problem) {
        let small = red.reduce(problem);
        let start = start.map(|v| red.restrict(v));
        let mut sol = solve_prepared(&small, cfg, start.as_deref())?;
        sol.values = red.expand(problem.blocks(), sol.values);
        return Ok(sol);
    }
    solve_prepared(problem, cfg, start)
}

fn solve_prepared(
    problem: &ConeProblem,
    cfg: &SolverConfig,
    start: Option<&[DMatrix<f64>]>,
) -> Result<ConeSolution> {
    let layout = Layout::new(problem.blocks());
    let dense = DenseForm::assemble(problem, &layout);

    if !problem.has_cones() {
        if let Some(sol) = solve_equality_qp(&dense, &layout) {
            return Ok(sol);
        }
    }

    let z0 = match start {
        Some(values) => project(&layout, &layout.pack(values)?)?,
        None => DVector::zeros(layout.len),
    };
    admm(&dense, &layout, cfg, z0)
}

/// Objective and constraints as dense arrays over the internal vector.
struct DenseForm {
    hessian: DMatrix<f64>,
    gradient: DVector<f64>,
    offset: f64,
    a: DMatrix<f64>,
    b: DVector<f64>,
    a_full: DMatrix<f64>,
    b_full: DVector<f64>,
}

impl DenseForm {
    fn assemble(problem: &ConeProblem, layout: &Layout) -> Self {
        let n = layout.len;
        let mut hessian = DMatrix::zeros(n, n);
        let mut gradient = DVector::zeros(n);
        let mut offset = 0.0;
        for row in problem.residuals() {
            let w = layout.dense(&row.terms);
            hessian.ger(1.0, &w, &w, 1.0);
            gradient.axpy(-row.target, &w, 1.0);
            offset += 0.5 * row.target * row.target;
        }
        gradient += layout.dense(problem.linear());

        let m = problem.equalities().len();
        let mut a_full = DMatrix::zeros(m, n);
        let mut b_full = DVector::zeros(m);
        for (i, eq) in problem.equalities().iter().enumerate() {
            let (terms, rhs) = eq.normalized();
            a_full.set_row(i, &layout.dense(&terms).transpose());
            b_full[i] = rhs;
        }
        let keep = independent_rows(&a_full);
        let a = DMatrix::from_fn(keep.len(), n, |i, j| a_full[(keep[i], j)]);
        let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| b_full[i]));
        Self {
            hessian,
            gradient,
            offset,
            a,
            b,
            a_full,
            b_full,
        }
    }

    fn objective(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.hessian * v)) + self.gradient.dot(v) + self.offset
    }

    fn equality_residual(&self, v: &DVector<f64>) -> f64 {
        if self.a_full.nrows() == 0 {
            return 0.0;
        }
        (&self.a_full * v - &self.b_full).amax()
    }
}

/// Row indices of a maximal linearly independent subset, chosen by
/// Gram–Schmidt with pivoting on the largest remaining residual norm.
/// Returned in ascending order.
fn independent_rows(a: &DMatrix<f64>) -> Vec<usize> {
    let m = a.nrows();
    let mut residual: Vec<DVector<f64>> = (0..m).map(|i| a.row(i).transpose()).collect();
    let scale = residual.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut keep = Vec::new();
    while !remaining.is_empty() {
        let (pos, norm) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &i)| (pos, residual[i].norm()))
            .fold(
                (0, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if norm <= DEPENDENT_ROW_TOL * scale {
            break;
        }
        let pivot = remaining.swap_remove(pos);
        let q = &residual[pivot] / norm;
        for &i in &remaining {
            let proj = residual[i].dot(&q);
            residual[i].axpy(-proj, &q, 1.0);
        }
        keep.push(pivot);
    }
    keep.sort_unstable();
    keep
}

/// Exact solution of `min ½vᵀHv + gᵀv s.t. Av = b` via the KKT system, or
/// `None` when the system is singular.
fn solve_equality_qp(dense: &DenseForm, layout: &Layout) -> Option<ConeSolution> {
    let n = layout.len;
    let m = dense.a.nrows();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&dense.hessian);
    kkt.view_mut((n, 0), (m, n)).copy_from(&dense.a);
    kkt.view_mut((0, n), (n, m)).copy_from(&dense.a.transpose());
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-&dense.gradient));
    rhs.rows_mut(n, m).copy_from(&dense.b);
    let sol = kkt.clone().lu().solve(&rhs)?;
    let check = (&kkt * &sol - &rhs).amax();
    if !sol.iter().all(|v| v.is_finite()) || check > 1e-9 * (1.0 + rhs.amax()) {
        return None;
    }
    let v = sol.rows(0, n).into_owned();
    Some(ConeSolution {
        values: layout.unpack(&v),
        objective: dense.objective(&v),
        primal_residual: dense.equality_residual(&v),
        dual_residual: 0.0,
        iterations: 0,
        status: SolveStatus::Solved,
    })
}

/// Cached affine map `r ↦ argmin ½vᵀ(H + σI)v − rᵀv s.t. Av = b`, written as
/// `v = T r + t₀` with `T = K⁻¹ − K⁻¹Aᵀ S⁻¹ A K⁻¹`, `S = A K⁻¹ Aᵀ`.
struct KktCache {
    transfer: DMatrix<f64>,
    shift: DVector<f64>,
}

impl KktCache {
    fn factor(dense: &DenseForm, sigma: f64) -> Result<Self> {
        let n = dense.hessian.nrows();
        let mut k = dense.hessian.clone();
        for i in 0..n {
            k[(i, i)] += sigma;
        }
        let chol = k
            .cholesky()
            .ok_or_else(|| Error::KktFactorization("H + σI is not positive definite".into()))?;
        let k_inv = chol.inverse();
        if dense.a.nrows() == 0 {
            return Ok(Self {
                transfer: k_inv,
                shift: DVector::zeros(n),
            });
        }
        let g = &k_inv * dense.a.transpose();
        let schur = &dense.a * &g;
        let schur_chol = schur
            .cholesky()
            .ok_or_else(|| Error::KktFactorization("Schur complement is singular".into()))?;
        let s_inv_gt = schur_chol.solve(&g.transpose());
        let transfer = &k_inv - &g * &s_inv_gt;
        let shift = &g * schur_chol.solve(&dense.b);
        Ok(Self { transfer, shift })
    }

    fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        &self.transfer * r + &self.shift
    }
}

fn project(layout: &Layout, v: &DVector<f64>) -> Result<DVector<f64>> {
    let mut out = v.clone();
    for (b, kind) in layout.kinds.iter().enumerate() {
        let (dim, psd) = match *kind {
            BlockKind::Psd { dim } => (dim, true),
            BlockKind::Nsd { dim } => (dim, false),
            _ => continue,
        };
        let range = layout.offsets[b]..layout.offsets[b] + dim * (dim + 1) / 2;
        let m = svec_to_mat(dim, &v.as_slice()[range.clone()]);
        let projected = if psd {
            psd_project(&m)?
        } else {
            nsd_project(&m)?
        };
        mat_to_svec(dim, &projected, &mut out.as_mut_slice()[range]);
    }
    Ok(out)
}

fn admm(
    dense: &DenseForm,
    layout: &Layout,
    cfg: &SolverConfig,
    z0: DVector<f64>,
) -> Result<ConeSolution> {
    let relax = cfg.over_relaxation;
    let mut sigma = cfg.penalty;
    let mut kkt = KktCache::factor(dense, sigma)?;
    let mut z = z0;
    let mut u = DVector::zeros(layout.len);
    let mut r_prim = f64::INFINITY;
    let mut r_dual = f64::INFINITY;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIters;

    for k in 1..=cfg.max_iters {
        iterations = k;
        let rhs = (&z - &u) * sigma - &dense.gradient;
        let x = kkt.apply(&rhs);
        let x_relaxed = &x * relax + &z * (1.0 - relax);
        let z_next = project(layout, &(&x_relaxed + &u))?;
        u += &x_relaxed - &z_next;
        r_prim = (&x - &z_next).amax();
        r_dual = sigma * (&z_next - &z).amax();
        z = z_next;

        if r_prim <= cfg.tol_primal
            && r_dual <= cfg.tol_dual
            && dense.equality_residual(&z) <= cfg.tol_primal
        {
            status = SolveStatus::Solved;
            break;
        }

        if cfg.adaptive_penalty && k % ADAPT_INTERVAL == 0 {
            let ratio = r_prim / r_dual.max(f64::MIN_POSITIVE);
            let new_sigma = if ratio > ADAPT_RATIO {
                sigma * 2.0
            } else if ratio < 1.0 / ADAPT_RATIO {
                sigma / 2.0
            } else {
                sigma
            };
            if new_sigma != sigma && (1e-6..=1e6).contains(&new_sigma) {
                u *= sigma / new_sigma;
                sigma = new_sigma;
                kkt = KktCache::factor(dense, sigma)?;
            }
        }
    }

    let mut primal_residual = r_prim.max(dense.equality_residual(&z));
    if let Some(v) = polish(layout, &dense.a_full, &dense.b_full, &z) {
        primal_residual = dense.equality_residual(&v);
        z = v;
    }
    if status != SolveStatus::Solved && primal_residual > 1e4 * cfg.tol_primal {
        status = SolveStatus::InfeasibleGuess;
    }
    Ok(ConeSolution {
        values: layout.unpack(&z),
        objective: dense.objective(&z),
        primal_residual,
        dual_residual: r_dual,
        iterations,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::ResidualRow;
    use crate::decision::{Block, BlockId, LinearEquality, Term, VarRef};
    use nalgebra::DVector;

    fn term(block: usize, r: usize, c: usize, w: f64) -> Term {
        Term {
            var: VarRef::new(BlockId(block), r, c),
            weight: w,
        }
    }

    #[test]
    fn pure_projection_problem() {
        // minimize ‖Q − diag(1, −1)‖² over Q ⪰ 0
        let mut p = ConeProblem::new(vec![Block {
            kind: BlockKind::Psd { dim: 2 },
            label: "Q".into(),
        }]);
        let target = [(0, 0, 1.0), (1, 1, -1.0)];
        for &(r, c, t) in &target {
            p.add_residual(ResidualRow {
                terms: vec![term(0, r, c, 1.0)],
                target: t,
            });
        }
        // off-diagonal appears twice in the Frobenius norm
        p.add_residual(ResidualRow {
            terms: vec![term(0, 0, 1, std::f64::consts::SQRT_2)],
            target: 0.0,
        });
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert!(sol.is_solved());
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!((&sol.values[0] - want).amax() < 1e-6);
    }

    #[test]
    fn scalar_psd_with_free_copy() {
        // minimize (q − 3)² s.t. q ⪰ 0, q = f
        let mut p = ConeProblem::new(vec![
            Block {
                kind: BlockKind::Psd { dim: 1 },
                label: "q".into(),
            },
            Block {
                kind: BlockKind::Free { rows: 1, cols: 1 },
                label: "f".into(),
            },
        ]);
        p.add_residual(ResidualRow {
            terms: vec![term(0, 0, 0, 1.0)],
            target: 3.0,
        });
        p.add_equality(LinearEquality {
            lhs: vec![term(0, 0, 0, 1.0)],
            rhs: vec![term(1, 0, 0, 1.0)],
            constant: 0.0,
        });
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert!(sol.is_solved());
        assert!((sol.values[0][(0, 0)] - 3.0).abs() < 1e-6);
        assert!((sol.values[1][(0, 0)] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn equality_only_problem_is_exact() {
        // minimize ‖v − (1, 2, 3)‖² s.t. v1 + v2 + v3 = 0
        let mut p = ConeProblem::new(vec![Block {
            kind: BlockKind::Free { rows: 3, cols: 1 },
            label: "v".into(),
        }]);
        for (i, t) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            p.add_residual(ResidualRow {
                terms: vec![term(0, i, 0, 1.0)],
                target: t,
            });
        }
        p.add_equality(LinearEquality {
            lhs: (0..3).map(|i| term(0, i, 0, 1.0)).collect(),
            rhs: vec![],
            constant: 0.0,
        });
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        let v = &sol.values[0];
        assert!((v[(0, 0)] + 1.0).abs() < 1e-12);
        assert!(v[(1, 0)].abs() < 1e-12);
        assert!((v[(2, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.0, 1.0]);
        assert_eq!(independent_rows(&a), vec![1, 2]);
    }

    #[test]
    fn duplicated_equalities_still_solve() {
        let mut p = ConeProblem::new(vec![
            Block {
                kind: BlockKind::Psd { dim: 1 },
                label: "q".into(),
            },
            Block {
                kind: BlockKind::Free { rows: 1, cols: 1 },
                label: "f".into(),
            },
        ]);
        p.add_residual(ResidualRow {
            terms: vec![term(1, 0, 0, 1.0)],
            target: -2.0,
        });
        for _ in 0..2 {
            p.add_equality(LinearEquality {
                lhs: vec![term(0, 0, 0, 1.0)],
                rhs: vec![term(1, 0, 0, 1.0)],
                constant: 0.0,
            });
        }
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert!(sol.is_solved());
        assert!(sol.values[1][(0, 0)].abs() < 1e-6);
    }

    #[test]
    fn rejects_out_of_range_reference() {
        let mut p = ConeProblem::new(vec![Block {
            kind: BlockKind::Psd { dim: 1 },
            label: "q".into(),
        }]);
        p.add_linear(term(0, 1, 0, 1.0));
        assert!(solve(&p, &SolverConfig::default()).is_err());
    }

    #[test]
    fn deterministic_iterates() {
        let mut p = ConeProblem::new(vec![Block {
            kind: BlockKind::Psd { dim: 3 },
            label: "Q".into(),
        }]);
        for i in 0..3 {
            p.add_residual(ResidualRow {
                terms: vec![term(0, i, i, 1.0)],
                target: i as f64 - 1.0,
            });
        }
        p.add_residual(ResidualRow {
            terms: vec![term(0, 0, 2, 1.0)],
            target: 0.7,
        });
        let a = solve(&p, &SolverConfig::default()).unwrap();
        let b = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.iterations, b.iterations);
    }
}
