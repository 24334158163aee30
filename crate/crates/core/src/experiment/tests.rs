use nalgebra::DMatrix;

use super::*;
use crate::learning::{Degrees, LearningProblem};
use crate::verify::{check_certificate, Grid, LyapunovCertificate};

fn small(kind: ExperimentKind, alg: Algorithm, dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        algorithm: alg,
        seeds: vec![0, 1],
        n_samples: vec![50],
        iterations: Some(3),
        trajectories: 2,
        output_dir: Some(dir.to_path_buf()),
        ..ExperimentConfig::default()
    }
}

#[test]
fn config_text_sets_and_overrides_keys() {
    let cfg = ExperimentConfig::from_text(
        "# sweep\nexperiment = exp2\nalgorithm = pgd\nseeds = 1, 4..6\nn_samples = 10,20\n\
         rho = 5\nminibatch = 32\nrho = 7 # later wins\n",
    )
    .unwrap();
    assert_eq!(cfg.experiment, ExperimentKind::NonlinearControl);
    assert_eq!(cfg.algorithm, Algorithm::Pgd);
    assert_eq!(cfg.seeds, vec![1, 4, 5]);
    assert_eq!(cfg.n_samples, vec![10, 20]);
    assert_eq!(cfg.rho, Some(7.0));
    assert_eq!(cfg.minibatch, Some(32));
    let mut cfg = cfg;
    cfg.set("minibatch", "full").unwrap();
    cfg.set("rho", "default").unwrap();
    assert_eq!(cfg.minibatch, None);
    assert_eq!(cfg.rho, None);
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    assert!(ExperimentConfig::from_text("learning_rate = 1").is_err());
    assert!(ExperimentConfig::from_text("seeds = a..b").is_err());
    assert!(ExperimentConfig::from_text("no equals sign").is_err());
    assert!(ExperimentConfig::from_text("experiment = exp3").is_err());
    let cfg = ExperimentConfig::from_text("rho = -1").unwrap();
    assert!(cfg.validate().is_err());
}

#[test]
fn resolved_text_round_trips() {
    let mut cfg =
        ExperimentConfig::from_text("experiment = exp2\nseeds = 0..3\nalpha = 2e-8").unwrap();
    cfg.minibatch = Some(16);
    let (resolved, _) = resolve(&cfg).unwrap();
    assert_eq!(resolved.iterations, 300);
    assert_eq!(resolved.rho, 1000.0);
    assert_eq!(resolved.alpha, 2e-8);
    let back = ExperimentConfig::from_text(&resolved.to_text()).unwrap();
    let (again, _) = resolve(&back).unwrap();
    assert_eq!(again, resolved);
    assert_eq!(config_hash(&again), config_hash(&resolved));
    assert_eq!(config_hash(&resolved).len(), 64);
}

#[test]
fn output_dir_prefers_config_then_environment() {
    let mut cfg = ExperimentConfig {
        output_dir: Some("from-config".into()),
        ..ExperimentConfig::default()
    };
    assert_eq!(cfg.output_dir(), std::path::PathBuf::from("from-config"));
    cfg.output_dir = None;
    let expected = std::env::var_os(OUTPUT_DIR_ENV)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into());
    assert_eq!(cfg.output_dir(), expected);
}

#[test]
fn first_plant_drift_matches_closed_form() {
    let b = nonlinear_system();
    for x in [[0.3, -1.2], [2.0, 0.5], [-3.0, 4.0]] {
        let (x1, x2) = (x[0], x[1]);
        let az = b.sys.a().eval(&x).unwrap() * b.sys.eval_z(&x);
        let expected = (-1.0 + x1 - 1.5 * x1 * x1 - 0.75 * x2 * x2) * x1
            + (0.25 - x1 * x1 - 0.5 * x2 * x2) * x2;
        assert!((az[0] - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        assert_eq!(az[1], 0.0);
        assert_eq!(
            b.sys.b().eval(&x).unwrap(),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0])
        );
    }
}

#[test]
fn first_expert_admits_a_certificate() {
    let b = nonlinear_system();
    let problem = LearningProblem::new(
        b.sys.clone(),
        Degrees::from_factors(b.d_f, b.d_p).unwrap(),
        b.eps,
    )
    .unwrap();
    let k = vec![DMatrix::from_row_slice(1, 2, &[-2.0, -10.0])];
    let cf = problem.certify_gain(&k).unwrap();
    let cert = LyapunovCertificate::new(
        &b.sys,
        problem.p_matrix(&cf).unwrap(),
        problem.f_matrix(&cf).unwrap(),
        b.eps,
    )
    .unwrap();
    assert!(
        check_certificate(&b.sys, &cert, &Grid::default())
            .unwrap()
            .pass
    );
}

#[test]
fn second_expert_is_locally_stabilizing() {
    let b = nonlinear_control();
    let x = [0.0, 0.0];
    let closed =
        b.sys.a().eval(&x).unwrap() + b.sys.b().eval(&x).unwrap() * b.expert.eval(&x).unwrap();
    let trace = closed.trace();
    let det = closed[(0, 0)] * closed[(1, 1)] - closed[(0, 1)] * closed[(1, 0)];
    assert!(trace < 0.0 && det > 0.0, "trace {trace} det {det}");
}

#[test]
fn custom_plant_is_built_from_config_text() {
    let cfg = ExperimentConfig::from_text(
        "experiment = custom\nnvars = 1\na = [[-1 + x1]]\nb = [[1]]\nz = [x1]\nexpert = [[-2]]",
    )
    .unwrap();
    let (resolved, b) = resolve(&cfg).unwrap();
    assert_eq!(b.sys.n(), 1);
    assert_eq!((resolved.d_f, resolved.d_p), (0, 0));
    let missing = ExperimentConfig::from_text("experiment = custom\nnvars = 1").unwrap();
    assert!(resolve(&missing).is_err());
}

#[test]
fn zero_iterations_give_a_single_trace_row() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentKind::NonlinearSystem, Algorithm::Admm, tmp.path());
    cfg.iterations = Some(0);
    cfg.seeds = vec![0];
    let report = run_experiment(&cfg, 1).unwrap();
    assert_eq!(report.failed(), 0);
    assert_eq!(report.runs[0].trace().len(), 1);
    let loss = std::fs::read_to_string(report.runs[0].dir.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 2);
}

#[test]
fn sweep_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(ExperimentKind::NonlinearSystem, Algorithm::Admm, tmp.path());
    let report = run_experiment(&cfg, 1).unwrap();
    assert_eq!(report.failed(), 0);
    let figure = std::fs::read_to_string(tmp.path().join(FIGURE_FILE)).unwrap();
    assert_eq!(
        figure.lines().next(),
        Some("algorithm,N,seed,iteration,loss")
    );
    assert_eq!(figure.lines().count(), 1 + 2 * 4);
    let manifest = std::fs::read_to_string(tmp.path().join(MANIFEST_FILE)).unwrap();
    assert!(manifest.starts_with(&format!("config_sha256 = {}\n", report.config_hash)));
    assert!(manifest.contains("failed = 0"));
    for r in &report.runs {
        assert_eq!(
            r.dir,
            tmp.path().join(run_name(Algorithm::Admm, 50, r.seed))
        );
        let contour = std::fs::read_to_string(r.dir.join("contour.csv")).unwrap();
        assert_eq!(contour.lines().count(), 1 + 41 * 41);
        for i in 0..2 {
            let t = std::fs::read_to_string(r.dir.join(format!("trajectory_{i:02}.csv"))).unwrap();
            assert_eq!(t.lines().next(), Some("t,x1,x2,u1,v"));
        }
        let coeffs = std::fs::read_to_string(r.dir.join("coefficients.txt")).unwrap();
        assert!(coeffs.starts_with("k_iterate = "));
        let loss = std::fs::read_to_string(r.dir.join("loss.csv")).unwrap();
        assert!(loss.lines().nth(1).unwrap().ends_with(",NaN"));
    }
}

#[test]
fn certificate_file_reverifies() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentKind::NonlinearSystem, Algorithm::Admm, tmp.path());
    cfg.seeds = vec![3];
    let report = run_experiment(&cfg, 1).unwrap();
    let (cert, rep) = report.runs[0].certificate.clone().unwrap();
    let b = nonlinear_system();
    let stored = load_certificate(&report.runs[0].dir.join("certificate.txt"), &b.sys).unwrap();
    assert_eq!(stored.cert, cert);
    assert_eq!(stored.grid, Grid::default());
    assert_eq!(stored.pass, rep.pass);
    assert_eq!(
        check_certificate(&b.sys, &stored.cert, &stored.grid)
            .unwrap()
            .pass,
        rep.pass
    );
}

#[test]
fn reruns_are_byte_identical() {
    for alg in [Algorithm::Admm, Algorithm::Pgd] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_experiment(&small(ExperimentKind::NonlinearSystem, alg, a.path()), 1).unwrap();
        run_experiment(&small(ExperimentKind::NonlinearSystem, alg, b.path()), 0).unwrap();
        for file in [FIGURE_FILE, MANIFEST_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(file)).unwrap(),
                std::fs::read(b.path().join(file)).unwrap()
            );
        }
        let run = run_name(alg, 50, 1);
        for file in ["loss.csv", "certificate.txt", "trajectory_01.csv"] {
            assert_eq!(
                std::fs::read(a.path().join(&run).join(file)).unwrap(),
                std::fs::read(b.path().join(&run).join(file)).unwrap()
            );
        }
    }
}
