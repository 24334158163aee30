use nalgebra::DMatrix;

use super::problem::{CertifiedFactors, Features, LearningProblem};
use super::{LearnOutcome, INIT_STREAM, MINIBATCH_STREAM};
use crate::conic::{solve_with_start, ResidualRow};
use crate::decision::{Term, VarRef};
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PgdConfig {
    pub alpha: f64,
    pub iterations: usize,
    pub init_halfwidth: f64,
    pub seed: u64,
    /// Points per stochastic gradient; `None` uses the full dataset.
    pub minibatch: Option<usize>,
}

/// Loss gradients with respect to each `F_j` and each (symmetric) `P_j`.
///
/// The `P_j` gradient is symmetrized, so `⟨G, D⟩_F` is the directional
/// derivative along any symmetric perturbation `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGradient {
    pub f: Vec<DMatrix<f64>>,
    pub p: Vec<DMatrix<f64>>,
}

/// Gradient of `(1/|S|) Σ_{s∈S} ‖F(x_s) P(x̃_s)⁻¹ Z(x_s) − û_s‖²` where `S` is
/// `batch` or every datapoint.
pub fn pgd_gradient(
    feats: &Features,
    cf: &CertifiedFactors,
    batch: Option<&[usize]>,
) -> Result<FactorGradient> {
    let all: Vec<usize>;
    let idx = match batch {
        Some(b) => b,
        None => {
            all = (0..feats.len()).collect();
            &all
        }
    };
    if idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let scale = 2.0 / idx.len() as f64;
    let mut gf: Vec<DMatrix<f64>> =
        cf.f.iter()
            .map(|m| DMatrix::zeros(m.nrows(), m.ncols()))
            .collect();
    let mut gp: Vec<DMatrix<f64>> =
        cf.p.iter()
            .map(|m| DMatrix::zeros(m.nrows(), m.ncols()))
            .collect();
    for &s in idx {
        let lu = feats.eval_p(s, &cf.p).lu();
        let y = lu
            .solve(&feats.z[s])
            .ok_or_else(|| Error::Singular(format!("P at datapoint {s}")))?;
        let fm = feats.eval_f(s, &cf.f);
        let r = &fm * &y - &feats.inputs[s];
        let ry = &r * y.transpose() * scale;
        for (g, mu) in gf.iter_mut().zip(&feats.f[s]) {
            *g += &ry * *mu;
        }
        let w = lu
            .solve(&(fm.transpose() * &r))
            .ok_or_else(|| Error::Singular(format!("P at datapoint {s}")))?;
        let wy = &w * y.transpose() * (-scale);
        let sym = (&wy + wy.transpose()) * 0.5;
        for (g, nu) in gp.iter_mut().zip(&feats.p[s]) {
            *g += &sym * *nu;
        }
    }
    Ok(FactorGradient { f: gf, p: gp })
}

/// Euclidean projection of `(F̃, P̃)` onto the certified set:
/// `min Σ‖F̃_j − F_j‖² + Σ‖P̃_j − P_j‖_F²` subject to the compiled constraints.
///
/// `start` warm-starts the cone solver.
pub fn pgd_project(
    problem: &LearningProblem,
    f: &[DMatrix<f64>],
    p: &[DMatrix<f64>],
    start: Option<&CertifiedFactors>,
    iteration: usize,
) -> Result<CertifiedFactors> {
    let layout = problem.gcs().layout();
    let mut cone = problem.gcs().feasibility_problem();
    for (j, fj) in f.iter().enumerate() {
        for r in 0..fj.nrows() {
            for c in 0..fj.ncols() {
                cone.add_residual(ResidualRow {
                    terms: vec![Term {
                        var: VarRef::new(layout.f_block(j), r, c),
                        weight: 1.0,
                    }],
                    target: fj[(r, c)],
                });
            }
        }
    }
    for (j, pj) in p.iter().enumerate() {
        for r in 0..pj.nrows() {
            for c in r..pj.ncols() {
                // Off-diagonal entries count twice in the Frobenius norm.
                let w = if r == c {
                    1.0
                } else {
                    std::f64::consts::SQRT_2
                };
                cone.add_residual(ResidualRow {
                    terms: vec![Term {
                        var: VarRef::sym(layout.p_block(j), r, c),
                        weight: w,
                    }],
                    target: w * 0.5 * (pj[(r, c)] + pj[(c, r)]),
                });
            }
        }
    }
    let values = start.map(CertifiedFactors::to_values);
    let sol = solve_with_start(&cone, problem.solver(), values.as_deref())?;
    problem.accept(sol, iteration)
}

/// Projects a random initialization, then alternates gradient steps of size
/// `α` with projections. `loss_trace[l]` is the loss of `F P⁻¹` after step
/// `l + 1`; `initial_loss` is measured after the first projection.
pub fn run_pgd(
    problem: &LearningProblem,
    feats: &Features,
    cfg: &PgdConfig,
) -> Result<LearnOutcome> {
    if !(cfg.alpha >= 0.0 && cfg.alpha.is_finite()) {
        return Err(Error::InvalidConfig("alpha must be non-negative".into()));
    }
    if cfg.minibatch == Some(0) {
        return Err(Error::InvalidConfig("minibatch must be positive".into()));
    }
    let mut rng = SplitMix64::stream(cfg.seed, INIT_STREAM);
    let (_, init) = problem.random_init(&mut rng, cfg.init_halfwidth);
    let mut batch_rng = SplitMix64::stream(cfg.seed, MINIBATCH_STREAM);
    let mut cf = pgd_project(problem, &init.f, &init.p, None, 0)?;
    let loss = |cf: &CertifiedFactors| feats.loss_fp(&cf.f, &cf.p).unwrap_or(f64::NAN);
    let mut out = LearnOutcome::new(loss(&cf));
    out.factors = Some(cf.clone());
    for it in 0..cfg.iterations {
        let batch = cfg
            .minibatch
            .map(|b| batch_rng.sample_indices(feats.len(), b));
        let grad = match pgd_gradient(feats, &cf, batch.as_deref()) {
            Ok(g) => g,
            Err(e) => {
                out.failure = Some(e);
                break;
            }
        };
        let f: Vec<_> =
            cf.f.iter()
                .zip(&grad.f)
                .map(|(a, g)| a - g * cfg.alpha)
                .collect();
        let p: Vec<_> =
            cf.p.iter()
                .zip(&grad.p)
                .map(|(a, g)| a - g * cfg.alpha)
                .collect();
        cf = match pgd_project(problem, &f, &p, Some(&cf), it + 1) {
            Ok(next) => next,
            Err(e) => {
                out.failure = Some(e);
                break;
            }
        };
        let l = loss(&cf);
        out.loss_trace.push(l);
        out.certified_trace.push(l);
        out.factors = Some(cf.clone());
    }
    Ok(out)
}
