use nalgebra::DMatrix;

use super::*;
use crate::decision::BlockKind;
use crate::polynomial::text::{parse_matrix, parse_vector};
use crate::polynomial::Exponent;

fn system(a: &str, b: &str, z: &str, n: usize) -> SystemDef {
    SystemDef::new(
        parse_matrix(a, n).unwrap(),
        parse_matrix(b, n).unwrap(),
        parse_vector(z, n).unwrap(),
    )
    .unwrap()
}

fn scalar() -> SystemDef {
    system("[[-1]]", "[[1]]", "[x1]", 1)
}

fn nonlinear() -> SystemDef {
    system(
        "[[-1 + x1 - 1.5*x1^2 - 0.75*x2^2, 0.25 - x1^2 - 0.5*x2^2], [0, 0]]",
        "[[0], [1]]",
        "[x1, x2]",
        2,
    )
}

fn random_matrix(rng: &mut SplitMix64, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
}

fn random_symmetric(rng: &mut SplitMix64, d: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, d, d);
    (&m + m.transpose()) * 0.5
}

fn random_values(gcs: &GramConstraintSet, rng: &mut SplitMix64) -> Vec<DMatrix<f64>> {
    gcs.blocks()
        .iter()
        .map(|b| match b.kind {
            BlockKind::Free { rows, cols } => random_matrix(rng, rows, cols),
            _ => random_symmetric(rng, b.kind.shape().0),
        })
        .collect()
}

#[test]
fn gram_basis_sizes() {
    let gb = choose_gram_basis(0, &[0, 1], 2, 2);
    assert_eq!(gb.z(), &[Exponent::zero(2)]);
    assert_eq!(gb.kron_dim(), 2);
    let gb = choose_gram_basis(2, &[0], 1, 1);
    assert_eq!(gb.z().len(), 2);
    let gb = choose_gram_basis(2, &[0, 1], 2, 2);
    assert_eq!(gb.kron_entries().len(), 6);
    assert_eq!(gb.kron_entries()[3], (1, 1));
}

#[test]
fn scalar_p_constraint_is_single_equality() {
    let gcs = GramConstraintSet::compile(&scalar(), 0, 0, Epsilons::default()).unwrap();
    assert_eq!(gcs.p_equalities().len(), 1);
    let text = gcs.dump();
    assert!(
        text.contains("eq 1.0*b0[0,0] = 1.0*b2[0,0] ; const -0.001\n"),
        "{text}"
    );
}

#[test]
fn scalar_stability_reduces_to_arithmetic() {
    let gcs = GramConstraintSet::compile(&scalar(), 0, 0, Epsilons::default()).unwrap();
    assert_eq!(gcs.stability_equalities().len(), 1);
    let one = DMatrix::from_element(1, 1, 1.0);
    let zero = DMatrix::zeros(1, 1);
    let mut values = gcs.assemble(&[one], &[zero]).unwrap();
    gcs.complete_gram(&mut values).unwrap();
    assert!((values[3][(0, 0)] - (-2.0 + 1e-4)).abs() < 1e-15);
    assert!((values[2][(0, 0)] - (1.0 - 1e-3)).abs() < 1e-15);
}

#[test]
fn two_state_constant_p_gives_three_equalities() {
    let sys = system("[[0, 1], [-1, 0]]", "[[0], [1]]", "[x1, x2]", 2);
    let gcs = GramConstraintSet::compile(&sys, 0, 0, Epsilons::default()).unwrap();
    assert_eq!(gcs.p_equalities().len(), 3);
    for eq in gcs.p_equalities() {
        assert_eq!(eq.lhs.len(), 1);
        assert_eq!(eq.rhs.len(), 1);
        assert_eq!(
            (eq.lhs[0].var.row, eq.lhs[0].var.col),
            (eq.rhs[0].var.row, eq.rhs[0].var.col)
        );
    }
}

#[test]
fn nonlinear_system_counts_match_enumeration() {
    let gcs = GramConstraintSet::compile(&nonlinear(), 0, 0, Epsilons::default()).unwrap();
    // P: constant monomial times {v1², v1v2, v2²}.
    assert_eq!(gcs.p_equalities().len(), 3);
    // S has degree 2 in (x1, x2): 6 monomials times 3 v-pairs, and z₂ = [1, x1, x2]
    // produces exactly the same 18 keys.
    assert_eq!(gcs.z2().z().len(), 3);
    assert_eq!(gcs.stability_equalities().len(), 18);
    assert_eq!(gcs.layout().q2_dim(), 6);
}

#[test]
fn undersized_gram_basis_is_rejected() {
    let sys = nonlinear();
    let gcs = GramConstraintSet::compile(&sys, 0, 0, Epsilons::default()).unwrap();
    let small = choose_gram_basis(0, &[0, 1], 2, 2);
    let err = compile_stability_constraint(&sys, gcs.layout(), 1e-4, &small).unwrap_err();
    assert!(matches!(err, Error::GramBasisTooSmall(_)));
    let err =
        compile_p_constraint(gcs.layout(), 1e-3, &choose_gram_basis(0, &[0], 2, 1)).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));
}

#[test]
fn every_gram_entry_appears_in_exactly_one_equality() {
    let sys = nonlinear();
    for (d_f, d_p) in [(0, 0), (2, 0), (1, 1)] {
        let gcs = GramConstraintSet::compile(&sys, d_f, d_p, Epsilons::default()).unwrap();
        for (q, eqs, dim) in [
            (
                gcs.layout().q1_block(),
                gcs.p_equalities(),
                gcs.layout().q1_dim(),
            ),
            (
                gcs.layout().q2_block(),
                gcs.stability_equalities(),
                gcs.layout().q2_dim(),
            ),
        ] {
            let mut seen = DMatrix::<usize>::zeros(dim, dim);
            for eq in eqs {
                for t in &eq.rhs {
                    assert_eq!(t.var.block, q);
                    assert!(t.var.row <= t.var.col);
                    seen[(t.var.row, t.var.col)] += 1;
                }
            }
            for r in 0..dim {
                for c in r..dim {
                    assert_eq!(seen[(r, c)], 1, "entry ({r},{c}) for degrees {d_f},{d_p}");
                }
            }
        }
    }
}

#[test]
fn completed_assignments_verify() {
    let sys = nonlinear();
    let mut rng = SplitMix64::new(7);
    for (d_f, d_p) in [(0, 0), (2, 0), (1, 1)] {
        let gcs = GramConstraintSet::compile(&sys, d_f, d_p, Epsilons::default()).unwrap();
        for _ in 0..5 {
            let mut values = random_values(&gcs, &mut rng);
            gcs.complete_gram(&mut values).unwrap();
            assert!(gcs
                .residuals(&values)
                .unwrap()
                .iter()
                .all(|r| r.abs() < 1e-12));
            let check = gcs.verify_compiled(&sys, &values, 200, 3).unwrap();
            assert!(check.within(1e-9), "{check:?}");
        }
    }
}

#[test]
fn perturbed_gram_entry_is_detected() {
    let sys = nonlinear();
    let gcs = GramConstraintSet::compile(&sys, 0, 0, Epsilons::default()).unwrap();
    let mut rng = SplitMix64::new(11);
    let mut values = random_values(&gcs, &mut rng);
    gcs.complete_gram(&mut values).unwrap();
    let q1 = values.len() - 2;
    values[q1][(0, 0)] += 1.0;
    let check = gcs.verify_compiled(&sys, &values, 200, 3).unwrap();
    assert!(check.max_residual > 1e-3);
}

#[test]
fn zero_assignment_residual_is_eps1() {
    let gcs = GramConstraintSet::compile(&scalar(), 0, 0, Epsilons::default()).unwrap();
    let values = gcs
        .assemble(&[DMatrix::zeros(1, 1)], &[DMatrix::zeros(1, 1)])
        .unwrap();
    let check = gcs.verify_compiled(&scalar(), &values, 50, 1).unwrap();
    assert!((check.max_residual - 1e-3).abs() < 1e-15);
}

#[test]
fn residuals_are_linear_without_margins() {
    let sys = nonlinear();
    let eps = Epsilons {
        eps1: 1e-300,
        eps2: 1e-300,
    };
    let gcs = GramConstraintSet::compile(&sys, 2, 0, eps).unwrap();
    let mut rng = SplitMix64::new(5);
    let values = random_values(&gcs, &mut rng);
    let doubled: Vec<_> = values.iter().map(|m| m * 2.0).collect();
    let r1 = gcs.residuals(&values).unwrap();
    let r2 = gcs.residuals(&doubled).unwrap();
    for (a, b) in r1.iter().zip(&r2) {
        assert!((b - 2.0 * a).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn lti_case_matches_matrix_inequalities() {
    let mut rng = SplitMix64::new(21);
    for _ in 0..5 {
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 2, 1);
        let sys = SystemDef::new(
            PolyMatrix::constant(2, a.clone()),
            PolyMatrix::constant(2, b.clone()),
            parse_vector("[x1, x2]", 2).unwrap(),
        )
        .unwrap();
        let eps = Epsilons::default();
        let gcs = GramConstraintSet::compile(&sys, 0, 0, eps).unwrap();
        assert_eq!(gcs.p_equalities().len(), 3);
        assert_eq!(gcs.stability_equalities().len(), 3);
        let p = random_symmetric(&mut rng, 2);
        let f = random_matrix(&mut rng, 1, 2);
        let mut values = gcs
            .assemble(std::slice::from_ref(&p), std::slice::from_ref(&f))
            .unwrap();
        gcs.complete_gram(&mut values).unwrap();
        let ident = DMatrix::<f64>::identity(2, 2);
        let q1 = &p - &ident * eps.eps1;
        let q2 = &p * a.transpose()
            + &a * &p
            + f.transpose() * b.transpose()
            + &b * &f
            + &ident * eps.eps2;
        assert!((&values[2] - q1).abs().max() < 1e-14);
        assert!((&values[3] - q2).abs().max() < 1e-14);
    }
}

#[test]
fn invalid_margins_are_rejected() {
    let sys = scalar();
    let layout = DecisionLayout::new(&sys, 0, 0);
    let gb = choose_gram_basis(0, &[], 1, 1);
    assert!(compile_p_constraint(&layout, 0.0, &gb).is_err());
    assert!(compile_stability_constraint(&sys, &layout, -1.0, &gb).is_err());
}

#[test]
fn expert_controller_admits_certificate() {
    use crate::conic::{solve, SolverConfig};
    use crate::decision::{Term, VarRef};
    let sys = nonlinear();
    let gcs = GramConstraintSet::compile(&sys, 0, 0, Epsilons::default()).unwrap();
    let mut problem = gcs.feasibility_problem();
    let k = [-2.0, -10.0];
    let (p0, f0) = (gcs.layout().p_block(0), gcs.layout().f_block(0));
    for c in 0..2 {
        let mut lhs = vec![Term {
            var: VarRef::new(f0, 0, c),
            weight: 1.0,
        }];
        for (r, kr) in k.iter().enumerate() {
            lhs.push(Term {
                var: VarRef::sym(p0, r, c),
                weight: -kr,
            });
        }
        problem.add_equality(LinearEquality {
            lhs,
            rhs: vec![],
            constant: 0.0,
        });
    }
    let sol = solve(&problem, &SolverConfig::default()).unwrap();
    assert!(sol.is_solved(), "{:?}", sol.status);
    let worst = gcs
        .residuals(&sol.values)
        .unwrap()
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    assert!(worst <= 1e-6, "{worst}");
    let check = gcs.verify_compiled(&sys, &sol.values, 200, 9).unwrap();
    assert!(check.max_residual <= 1e-5, "{check:?}");
}
