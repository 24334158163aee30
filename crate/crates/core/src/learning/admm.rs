use nalgebra::DMatrix;

use super::problem::{CertifiedFactors, Features, LearningProblem};
use super::{LearnOutcome, INIT_STREAM};
use crate::conic::{solve_with_start, ResidualRow};
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub rho: f64,
    pub iterations: usize,
    pub init_halfwidth: f64,
    pub seed: u64,
}

/// Iterate of the alternating scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub k: Vec<DMatrix<f64>>,
    pub factors: CertifiedFactors,
    /// Scaled duals, one per `F` basis monomial.
    pub y: Vec<DMatrix<f64>>,
    pub rho: f64,
}

impl AdmmState {
    /// Random `{K_i}`, `{F_i}`, `{P_i}` on `[−h, h]`, zero duals.
    pub fn init(problem: &LearningProblem, rho: f64, halfwidth: f64, seed: u64) -> Result<Self> {
        if rho <= 0.0 || !rho.is_finite() {
            return Err(Error::InvalidConfig("rho must be positive".into()));
        }
        let mut rng = SplitMix64::stream(seed, INIT_STREAM);
        let (k, factors) = problem.random_init(&mut rng, halfwidth);
        let y = vec![DMatrix::zeros(problem.sys().m(), problem.sys().p()); problem.f_basis().len()];
        Ok(Self { k, factors, y, rho })
    }
}

/// Coupling residuals `F_k − Σ_{E[k]} K_i P_j`.
pub fn coupling_residual(
    problem: &LearningProblem,
    k: &[DMatrix<f64>],
    cf: &CertifiedFactors,
) -> Vec<DMatrix<f64>> {
    problem
        .products(k, &cf.p)
        .into_iter()
        .zip(&cf.f)
        .map(|(kp, f)| f - kp)
        .collect()
}

/// `J({K_i}) + Σ_k (ρ/2)‖F_k − Σ K_i P_j + Y_k‖²`.
pub fn augmented_lagrangian(
    problem: &LearningProblem,
    feats: &Features,
    state: &AdmmState,
    k: &[DMatrix<f64>],
) -> f64 {
    let penalty: f64 = coupling_residual(problem, k, &state.factors)
        .iter()
        .zip(&state.y)
        .map(|(r, y)| (r + y).norm_squared())
        .sum();
    feats.loss_k(k) + 0.5 * state.rho * penalty
}

/// Normal equations of the K-step, which separate by output row.
///
/// For row `r` the unknown is `θ = [K_0[r,:], K_1[r,:], …]ᵀ` and the system is
/// `Gθ = h_r` with `G = (2/N)ΦᵀΦ + ρ Σ_k E_kᵀE_k`.
struct KNormal {
    g: DMatrix<f64>,
    rhs: DMatrix<f64>,
}

fn k_normal(problem: &LearningProblem, feats: &Features, state: &AdmmState) -> KNormal {
    let (m, p) = (problem.sys().m(), problem.sys().p());
    let nk = problem.k_basis().len();
    let dim = nk * p;
    let scale = 2.0 / feats.len() as f64;
    let n = feats.len();
    let phi = DMatrix::from_fn(n, dim, |s, col| feats.k[s][col / p] * feats.z[s][col % p]);
    let u = DMatrix::from_fn(n, m, |s, r| feats.inputs[s][r]);
    let mut g = phi.tr_mul(&phi) * scale;
    let mut rhs = phi.tr_mul(&u) * scale;
    // Penalty: row r of Σ K_i P_j is Σ θ_iᵀ P_j, so E_k has block i equal to
    // P_jᵀ = P_j for each (i, j) ∈ E[k].
    for (kidx, set) in problem.index_sets().iter().enumerate() {
        let mut e = DMatrix::zeros(p, dim);
        for &(i, j) in set {
            let mut blk = e.columns_mut(i * p, p);
            blk += &state.factors.p[j];
        }
        g.gemm_tr(state.rho, &e, &e, 1.0);
        let target = &state.factors.f[kidx] + &state.y[kidx];
        // rhs[:, r] += ρ E_kᵀ target[r,:]ᵀ
        rhs.gemm_tr(state.rho, &e, &target.transpose(), 1.0);
    }
    KNormal { g, rhs }
}

/// Exact minimizer of the augmented Lagrangian over `{K_i}`.
pub fn admm_k_step(
    problem: &LearningProblem,
    feats: &Features,
    state: &AdmmState,
) -> Result<Vec<DMatrix<f64>>> {
    if state.rho <= 0.0 {
        return Err(Error::InvalidConfig("rho must be positive".into()));
    }
    let normal = k_normal(problem, feats, state);
    let theta = match normal.g.clone().cholesky() {
        Some(ch) => ch.solve(&normal.rhs),
        None => normal
            .g
            .lu()
            .solve(&normal.rhs)
            .ok_or_else(|| Error::Singular("K-step normal matrix".into()))?,
    };
    Ok(unpack_theta(problem, &theta))
}

fn unpack_theta(problem: &LearningProblem, theta: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let (m, p) = (problem.sys().m(), problem.sys().p());
    (0..problem.k_basis().len())
        .map(|i| DMatrix::from_fn(m, p, |r, c| theta[(i * p + c, r)]))
        .collect()
}

/// Gradient of the augmented Lagrangian with respect to each `K_i`.
pub fn k_gradient(
    problem: &LearningProblem,
    feats: &Features,
    state: &AdmmState,
    k: &[DMatrix<f64>],
) -> Vec<DMatrix<f64>> {
    let normal = k_normal(problem, feats, state);
    let (m, p) = (problem.sys().m(), problem.sys().p());
    let theta = DMatrix::from_fn(k.len() * p, m, |row, r| k[row / p][(r, row % p)]);
    let grad = &normal.g * theta - normal.rhs;
    unpack_theta(problem, &grad)
}

/// Minimizes `Σ_k ½‖F_k − Σ K_i P_j + Y_k‖²` over the certified set.
pub fn admm_fp_step(
    problem: &LearningProblem,
    state: &AdmmState,
    iteration: usize,
) -> Result<CertifiedFactors> {
    let mut cone = problem.gcs().feasibility_problem();
    for (kidx, r, c, terms) in problem.coupling_terms(&state.k) {
        cone.add_residual(ResidualRow {
            terms,
            target: -state.y[kidx][(r, c)],
        });
    }
    let start = state.factors.to_values();
    let sol = solve_with_start(&cone, problem.solver(), Some(&start))?;
    problem.accept(sol, iteration)
}

/// `Y_k ← Y_k + F_k − Σ_{E[k]} K_i P_j`.
pub fn admm_dual_step(problem: &LearningProblem, state: &AdmmState) -> Vec<DMatrix<f64>> {
    coupling_residual(problem, &state.k, &state.factors)
        .into_iter()
        .zip(&state.y)
        .map(|(r, y)| y + r)
        .collect()
}

/// Runs `cfg.iterations` rounds of K-step, FP-step and dual update.
///
/// `loss_trace[l]` is the imitation loss of `{K_i}` after round `l + 1`;
/// `certified_trace[l]` is the loss of `F P⁻¹` from the same round.
pub fn run_admm(
    problem: &LearningProblem,
    feats: &Features,
    cfg: &AdmmConfig,
) -> Result<LearnOutcome> {
    let mut state = AdmmState::init(problem, cfg.rho, cfg.init_halfwidth, cfg.seed)?;
    let mut out = LearnOutcome::new(feats.loss_k(&state.k));
    out.k = Some(state.k.clone());
    for it in 0..cfg.iterations {
        let k = match admm_k_step(problem, feats, &state) {
            Ok(k) => k,
            Err(e) => {
                out.failure = Some(e);
                break;
            }
        };
        state.k = k;
        let factors = match admm_fp_step(problem, &state, it + 1) {
            Ok(cf) => cf,
            Err(e) => {
                out.failure = Some(e);
                break;
            }
        };
        state.factors = factors;
        state.y = admm_dual_step(problem, &state);
        out.loss_trace.push(feats.loss_k(&state.k));
        out.certified_trace.push(
            feats
                .loss_fp(&state.factors.f, &state.factors.p)
                .unwrap_or(f64::NAN),
        );
        out.k = Some(state.k.clone());
        out.factors = Some(state.factors.clone());
    }
    Ok(out)
}
