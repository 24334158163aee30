use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use super::artifacts::{certificate_text, contour_csv, csv, fmt_f64, loss_csv, trajectory_csv};
use super::builtin::{builtin, Builtin};
use super::config::{Algorithm, ExperimentConfig, ResolvedConfig};
use crate::learning::{
    generate_data, run_admm, run_pgd, AdmmConfig, Degrees, Features, LearnOutcome, LearningProblem,
    PgdConfig,
};
use crate::polynomial::text::format_matrix;
use crate::sos::Epsilons;
use crate::verify::{
    boundary_seeds, check_certificate, contour, simulate, CertificateReport, Grid,
    LyapunovCertificate, SimConfig,
};
use crate::{par, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const FIGURE_FILE: &str = "loss_traces.csv";

/// Fills every unset config field from the experiment definition.
pub fn resolve(cfg: &ExperimentConfig) -> Result<(ResolvedConfig, Builtin)> {
    cfg.validate()?;
    let b = builtin(cfg.experiment, &cfg.custom)?;
    let default_iters = match cfg.algorithm {
        Algorithm::Admm => b.admm_iterations,
        Algorithm::Pgd => b.pgd_iterations,
    };
    let resolved = ResolvedConfig {
        experiment: cfg.experiment,
        algorithm: cfg.algorithm,
        seeds: cfg.seeds.clone(),
        n_samples: cfg.n_samples.clone(),
        iterations: cfg.iterations.unwrap_or(default_iters),
        rho: cfg.rho.unwrap_or(b.rho),
        alpha: cfg.alpha.unwrap_or(b.alpha),
        sigma: cfg.sigma,
        init_halfwidth: cfg.init_halfwidth,
        data_halfwidth: cfg.data_halfwidth,
        d_f: cfg.d_f.unwrap_or(b.d_f),
        d_p: cfg.d_p.unwrap_or(b.d_p),
        eps: Epsilons {
            eps1: cfg.eps1.unwrap_or(b.eps.eps1),
            eps2: cfg.eps2.unwrap_or(b.eps.eps2),
        },
        minibatch: cfg.minibatch,
        trajectories: cfg.trajectories,
        custom: cfg.custom.clone(),
    };
    Ok((resolved, b))
}

pub fn config_hash(resolved: &ResolvedConfig) -> String {
    Sha256::digest(resolved.to_text().as_bytes())
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Everything one `(N, seed)` run produced.
#[derive(Debug)]
pub struct RunResult {
    pub n: usize,
    pub seed: u64,
    pub dir: PathBuf,
    /// `None` when the run aborted before learning started.
    pub outcome: Option<LearnOutcome>,
    pub certificate: Option<(LyapunovCertificate, CertificateReport)>,
    /// `V` along each simulated closed-loop trajectory.
    pub trajectories: Vec<Vec<f64>>,
    pub error: Option<String>,
}

impl RunResult {
    pub fn name(&self, algorithm: Algorithm) -> String {
        run_name(algorithm, self.n, self.seed)
    }

    /// Trace of the tracked iterate, initial loss first.
    pub fn trace(&self) -> Vec<f64> {
        self.outcome
            .as_ref()
            .map(LearnOutcome::full_trace)
            .unwrap_or_default()
    }

    pub fn final_loss(&self) -> f64 {
        self.trace().last().copied().unwrap_or(f64::NAN)
    }

    /// Loss of the certified controller `F P⁻¹` at the end of the run.
    pub fn final_certified_loss(&self) -> f64 {
        let Some(out) = &self.outcome else {
            return f64::NAN;
        };
        out.certified_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn certificate_passed(&self) -> bool {
        self.certificate.as_ref().is_some_and(|(_, r)| r.pass)
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn run_name(algorithm: Algorithm, n: usize, seed: u64) -> String {
    format!("{}_N{}_seed{}", algorithm.name(), n, seed)
}

#[derive(Debug)]
pub struct SweepReport {
    pub config: ResolvedConfig,
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub runs: Vec<RunResult>,
}

impl SweepReport {
    pub fn failed(&self) -> usize {
        self.runs.iter().filter(|r| !r.ok()).count()
    }
}

/// Runs every `(N, seed)` pair with at most `jobs` worker threads
/// (`0` = all cores) and writes artifacts under the output directory.
///
/// A failed run is recorded in the manifest and does not stop the sweep.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<SweepReport> {
    let (resolved, b) = resolve(cfg)?;
    let out_dir = cfg.output_dir();
    std::fs::create_dir_all(&out_dir)?;
    let degrees = Degrees::from_factors(resolved.d_f, resolved.d_p)?;
    let problem = LearningProblem::new(b.sys.clone(), degrees, resolved.eps)?;

    let pairs: Vec<(usize, u64)> = resolved
        .n_samples
        .iter()
        .flat_map(|&n| resolved.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let runs = par::with_jobs(jobs, || {
        par::map(&pairs, |&(n, seed)| {
            let dir = out_dir.join(run_name(resolved.algorithm, n, seed));
            run_single(&resolved, &b, &problem, n, seed, dir)
        })
    });

    let report = SweepReport {
        config_hash: config_hash(&resolved),
        config: resolved,
        output_dir: out_dir,
        runs,
    };
    std::fs::write(report.output_dir.join(FIGURE_FILE), figure_csv(&report))?;
    std::fs::write(
        report.output_dir.join(MANIFEST_FILE),
        manifest_text(&report),
    )?;
    Ok(report)
}

fn run_single(
    cfg: &ResolvedConfig,
    b: &Builtin,
    problem: &LearningProblem,
    n: usize,
    seed: u64,
    dir: PathBuf,
) -> RunResult {
    let mut result = RunResult {
        n,
        seed,
        dir,
        outcome: None,
        certificate: None,
        trajectories: Vec::new(),
        error: None,
    };
    if let Err(e) = execute(cfg, b, problem, &mut result) {
        result.error = Some(e.to_string());
    }
    result
}

fn execute(
    cfg: &ResolvedConfig,
    b: &Builtin,
    problem: &LearningProblem,
    result: &mut RunResult,
) -> Result<()> {
    std::fs::create_dir_all(&result.dir)?;
    let sys = &b.sys;
    let data = generate_data(
        sys,
        &b.expert,
        result.n,
        cfg.sigma,
        cfg.data_halfwidth,
        result.seed,
    )?;
    let feats = Features::new(problem, &data)?;
    let outcome = match cfg.algorithm {
        Algorithm::Admm => run_admm(
            problem,
            &feats,
            &AdmmConfig {
                rho: cfg.rho,
                iterations: cfg.iterations,
                init_halfwidth: cfg.init_halfwidth,
                seed: result.seed,
            },
        )?,
        Algorithm::Pgd => run_pgd(
            problem,
            &feats,
            &PgdConfig {
                alpha: cfg.alpha,
                iterations: cfg.iterations,
                init_halfwidth: cfg.init_halfwidth,
                seed: result.seed,
                minibatch: cfg.minibatch,
            },
        )?,
    };
    let trace = outcome.full_trace();
    let initial_certified = match cfg.algorithm {
        Algorithm::Admm => f64::NAN,
        Algorithm::Pgd => outcome.initial_loss,
    };
    let certified: Vec<f64> = std::iter::once(initial_certified)
        .chain(outcome.certified_trace.iter().copied())
        .collect();
    std::fs::write(result.dir.join("loss.csv"), loss_csv(&trace, &certified))?;
    let failure = outcome.failure.as_ref().map(ToString::to_string);
    let factors = outcome.factors.clone();
    let k_iterate = match &outcome.k {
        Some(k) => Some(problem.k_matrix(k)?),
        None => None,
    };
    result.outcome = Some(outcome);

    if let Some(cf) = factors {
        let p = problem.p_matrix(&cf)?;
        let f = problem.f_matrix(&cf)?;
        let cert = LyapunovCertificate::new(sys, p, f, cfg.eps)?;
        let controller = cert.controller()?;
        let mut coeffs = String::new();
        if let Some(k) = &k_iterate {
            let _ = writeln!(coeffs, "k_iterate = {}", format_matrix(k));
        }
        if let Some(k) = controller.as_polynomial() {
            let _ = writeln!(coeffs, "k = {}", format_matrix(k));
        }
        let _ = writeln!(coeffs, "f = {}", format_matrix(&cert.f));
        let _ = writeln!(coeffs, "p = {}", format_matrix(&cert.p));
        std::fs::write(result.dir.join("coefficients.txt"), coeffs)?;

        let grid = Grid::default();
        let report = check_certificate(sys, &cert, &grid)?;
        std::fs::write(
            result.dir.join("certificate.txt"),
            certificate_text(&cert, &grid, &report),
        )?;
        if sys.n() == 2 {
            std::fs::write(
                result.dir.join("contour.csv"),
                contour_csv(&contour(sys, &cert, &grid)?),
            )?;
            for (i, x0) in boundary_seeds(grid.lo, grid.hi, cfg.trajectories)
                .iter()
                .enumerate()
            {
                let rec = simulate(sys, &controller, Some(&cert), x0, &SimConfig::default())?;
                std::fs::write(
                    result.dir.join(format!("trajectory_{i:02}.csv")),
                    trajectory_csv(&rec),
                )?;
                result.trajectories.push(rec.v_values);
            }
        }
        result.certificate = Some((cert, report));
    }
    if let Some(msg) = failure {
        result.error = Some(msg);
    }
    Ok(())
}

/// `algorithm,N,seed,iteration,loss` over every run, in sweep order.
pub fn figure_csv(report: &SweepReport) -> String {
    let alg = report.config.algorithm.name();
    csv(
        &["algorithm", "N", "seed", "iteration", "loss"],
        report.runs.iter().flat_map(|r| {
            r.trace().into_iter().enumerate().map(move |(i, l)| {
                vec![
                    alg.to_string(),
                    r.n.to_string(),
                    r.seed.to_string(),
                    i.to_string(),
                    fmt_f64(l),
                ]
            })
        }),
    )
}

pub fn manifest_text(report: &SweepReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config_sha256 = {}", report.config_hash);
    let _ = writeln!(s, "runs = {}", report.runs.len());
    let _ = writeln!(s, "failed = {}", report.failed());
    s.push_str("\n[config]\n");
    s.push_str(&report.config.to_text());
    s.push_str("\n[runs]\n");
    let alg = report.config.algorithm;
    s.push_str(&csv(
        &[
            "run",
            "N",
            "seed",
            "status",
            "iterations",
            "final_loss",
            "final_certified_loss",
            "certificate",
            "error",
        ],
        report.runs.iter().map(|r| {
            let iterations = r.outcome.as_ref().map_or(0, |o| o.loss_trace.len());
            let certificate = match &r.certificate {
                Some((_, rep)) if rep.pass => "pass",
                Some(_) => "fail",
                None => "none",
            };
            vec![
                r.name(alg),
                r.n.to_string(),
                r.seed.to_string(),
                if r.ok() { "ok" } else { "failed" }.to_string(),
                iterations.to_string(),
                fmt_f64(r.final_loss()),
                fmt_f64(r.final_certified_loss()),
                certificate.to_string(),
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            ]
        }),
    ));
    s
}
