use nalgebra::DMatrix;

use super::*;
use crate::experiment::{nonlinear_control, nonlinear_system, EXPERIMENT_EPS};
use crate::learning::{Degrees, LearnedController, LearningProblem};
use crate::polynomial::text::{parse_matrix, parse_vector};
use crate::polynomial::{PolyMatrix, SystemDef};
use crate::sos::Epsilons;

fn scalar_plant(a: f64) -> SystemDef {
    SystemDef::new(
        PolyMatrix::constant(1, DMatrix::from_element(1, 1, a)),
        parse_matrix("[[1]]", 1).unwrap(),
        parse_vector("[x1]", 1).unwrap(),
    )
    .unwrap()
}

fn scalar(c: f64) -> PolyMatrix {
    PolyMatrix::constant(1, DMatrix::from_element(1, 1, c))
}

fn small_grid() -> Grid {
    Grid {
        lo: -2.0,
        hi: 2.0,
        points_per_axis: 5,
    }
}

fn expert_certificate() -> (SystemDef, LyapunovCertificate) {
    let b = nonlinear_system();
    let problem = LearningProblem::new(
        b.sys.clone(),
        Degrees::from_factors(0, 0).unwrap(),
        EXPERIMENT_EPS,
    )
    .unwrap();
    let k = b.expert.coefficients_in(problem.k_basis()).unwrap();
    let cf = problem.certify_gain(&k).unwrap();
    let cert = LyapunovCertificate::new(
        &b.sys,
        problem.p_matrix(&cf).unwrap(),
        problem.f_matrix(&cf).unwrap(),
        EXPERIMENT_EPS,
    )
    .unwrap();
    (b.sys, cert)
}

#[test]
fn scalar_stability_matrix_is_arithmetic() {
    let sys = scalar_plant(-1.0);
    // 2·P·A + 2·B·F = −2 + 2F with P = 1
    for f in [0.0, 0.5, 1.5] {
        let s = stability_matrix(&sys, &scalar(1.0), &scalar(f), &[0.3]);
        assert!((s[(0, 0)] - (-2.0 + 2.0 * f)).abs() < 1e-15);
    }
}

#[test]
fn scalar_certificate_passes_or_fails_with_the_sign() {
    let sys = scalar_plant(-1.0);
    let eps = Epsilons {
        eps1: 1e-3,
        eps2: 1e-4,
    };
    let good = LyapunovCertificate::new(&sys, scalar(1.0), scalar(0.0), eps).unwrap();
    let rep = check_certificate(&sys, &good, &small_grid()).unwrap();
    assert!(rep.pass && rep.global);
    assert_eq!(rep.points, 5);
    assert!((rep.max_eig_s + 2.0).abs() < 1e-15);
    let bad = LyapunovCertificate::new(&sys, scalar(1.0), scalar(1.5), eps).unwrap();
    assert!(!check_certificate(&sys, &bad, &small_grid()).unwrap().pass);
    let thin = LyapunovCertificate::new(&sys, scalar(1e-4), scalar(0.0), eps).unwrap();
    assert!(!check_certificate(&sys, &thin, &small_grid()).unwrap().pass);
}

#[test]
fn p_on_unreduced_variable_is_rejected() {
    let b = nonlinear_system();
    let p = parse_matrix("[[1 + x2^2, 0], [0, 1]]", 2).unwrap();
    let f = parse_matrix("[[0, 0]]", 2).unwrap();
    assert!(LyapunovCertificate::new(&b.sys, p, f, EXPERIMENT_EPS).is_err());
}

#[test]
fn expert_certificate_passes_the_default_grid() {
    let (sys, cert) = expert_certificate();
    let rep = check_certificate(&sys, &cert, &Grid::default()).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.points, 41 * 41);
    let k = cert.controller().unwrap();
    let gain = k.gain(&[0.0, 0.0]).unwrap();
    assert!((gain - DMatrix::from_row_slice(1, 2, &[-2.0, -10.0])).amax() < 1e-6);
}

#[test]
fn uncontrolled_oscillator_fails() {
    let b = nonlinear_control();
    let cert = LyapunovCertificate::new(
        &b.sys,
        PolyMatrix::identity(2, 2),
        PolyMatrix::zeros(2, 1, 2),
        EXPERIMENT_EPS,
    )
    .unwrap();
    let rep = check_certificate(&b.sys, &cert, &Grid::default()).unwrap();
    assert!(!rep.pass);
    assert!(rep.max_eig_s.abs() < 1e-12);
}

#[test]
fn rate_matches_difference_along_the_flow() {
    let b = nonlinear_system();
    let p = parse_matrix("[[2 + x1^2, 0.1*x1], [0.1*x1, 1]]", 2).unwrap();
    let f = parse_matrix("[[-1 + x1, -3]]", 2).unwrap();
    let cert = LyapunovCertificate::new(&b.sys, p, f, EXPERIMENT_EPS).unwrap();
    let k = cert.controller().unwrap();
    for x in [[0.5, -1.0], [-1.5, 0.3], [2.0, 2.0]] {
        let u = k.input(&b.sys, &x).unwrap();
        let xdot = b.sys.dynamics(&x, &u);
        let h = 1e-6;
        let shift = |s: f64| [x[0] + s * xdot[0], x[1] + s * xdot[1]];
        let fd = (lyapunov_value(&b.sys, &cert, &shift(h)).unwrap()
            - lyapunov_value(&b.sys, &cert, &shift(-h)).unwrap())
            / (2.0 * h);
        let rate = lyapunov_rate(&b.sys, &cert, &x).unwrap();
        assert!(
            (rate - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
            "{rate} vs {fd}"
        );
    }
}

#[test]
fn rate_is_negative_where_the_certificate_holds() {
    let (sys, cert) = expert_certificate();
    for x in Grid::default().points(2) {
        if x.iter().any(|&v| v != 0.0) {
            assert!(lyapunov_rate(&sys, &cert, &x).unwrap() < 0.0, "{x:?}");
        }
    }
}

#[test]
fn rk4_error_falls_with_the_fourth_power_of_the_step() {
    // ẋ = −x + u with u = −x gives x(t) = e^{−2t}
    let sys = scalar_plant(-1.0);
    let k = LearnedController::Polynomial(scalar(-1.0));
    let err = |dt: f64| {
        let cfg = SimConfig {
            t_end: 1.0,
            dt,
            record_every: 1,
        };
        let rec = simulate(&sys, &k, None, &[1.0], &cfg).unwrap();
        (rec.states.last().unwrap()[0] - (-2.0f64).exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((ratio - 16.0).abs() < 1.5, "{ratio}");
}

#[test]
fn lyapunov_value_decreases_along_certified_trajectories() {
    let (sys, cert) = expert_certificate();
    let k = cert.controller().unwrap();
    for x0 in boundary_seeds(-10.0, 10.0, 8) {
        let rec = simulate(&sys, &k, Some(&cert), &x0, &SimConfig::default()).unwrap();
        assert!(!rec.diverged);
        assert!(rec.v_values.windows(2).all(|w| w[1] <= w[0]), "{x0:?}");
        assert!(rec.v_values.last().unwrap() < &(1e-3 * rec.v_values[0]));
    }
}

#[test]
fn unstable_loop_is_flagged_divergent() {
    let sys = scalar_plant(1.0);
    let k = LearnedController::Polynomial(scalar(10.0));
    let rec = simulate(&sys, &k, None, &[1.0], &SimConfig::default()).unwrap();
    assert!(rec.diverged);
    assert!(rec.v_values.iter().all(|v| v.is_nan()));
}

#[test]
fn boundary_seeds_walk_the_square() {
    let s = boundary_seeds(-10.0, 10.0, 4);
    assert_eq!(
        s,
        vec![[-10.0, -10.0], [10.0, -10.0], [10.0, 10.0], [-10.0, 10.0]]
    );
    for p in boundary_seeds(-10.0, 10.0, 20) {
        assert!(p.iter().any(|v| v.abs() == 10.0) && p.iter().all(|v| v.abs() <= 10.0));
    }
}

#[test]
fn contour_covers_the_grid_and_vanishes_at_the_origin() {
    let (sys, cert) = expert_certificate();
    let pts = contour(&sys, &cert, &Grid::default()).unwrap();
    assert_eq!(pts.len(), 1681);
    let origin = pts.iter().find(|p| p[0] == 0.0 && p[1] == 0.0).unwrap();
    assert_eq!(origin[2], 0.0);
    assert!(pts.iter().all(|p| p[2] >= 0.0));
}
