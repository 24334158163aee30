use nalgebra::DMatrix;

use super::config::{CustomSystem, ExperimentKind};
use crate::polynomial::text::{parse_matrix, parse_vector};
use crate::polynomial::{PolyMatrix, SystemDef};
use crate::sos::Epsilons;
use crate::{Error, Result};

/// Certificate margins used by the built-in experiments.
///
/// The compiled conditions are homogeneous in `(P, F, Q₁, Q₂)` apart from
/// the margins, so `ε₁` only fixes the scale of `P`. With `ε₁ = 1` the
/// coupling `K·P = F` is weighted comparably to the data term at the
/// published `ρ`, instead of being scaled down by a factor of order `ε₁²`.
pub const EXPERIMENT_EPS: Epsilons = Epsilons {
    eps1: 1.0,
    eps2: 1e-4,
};

/// Plant, expert and per-experiment defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Builtin {
    pub sys: SystemDef,
    pub expert: PolyMatrix,
    pub d_f: u32,
    pub d_p: u32,
    pub rho: f64,
    pub alpha: f64,
    pub admm_iterations: usize,
    pub pgd_iterations: usize,
    pub eps: Epsilons,
}

fn plant(a: &str, b: &str, z: &str, nvars: usize) -> Result<SystemDef> {
    SystemDef::new(
        parse_matrix(a, nvars)?,
        parse_matrix(b, nvars)?,
        parse_vector(z, nvars)?,
    )
}

/// Two-state plant with quadratic drift and the linear expert `[−2, −10]`.
pub fn nonlinear_system() -> Builtin {
    let sys = plant(
        "[[-1 + x1 - 1.5*x1^2 - 0.75*x2^2, 0.25 - x1^2 - 0.5*x2^2], [0, 0]]",
        "[[0], [1]]",
        "[x1, x2]",
        2,
    )
    .expect("built-in system parses");
    Builtin {
        sys,
        expert: PolyMatrix::constant(2, DMatrix::from_row_slice(1, 2, &[-2.0, -10.0])),
        d_f: 0,
        d_p: 0,
        rho: 1.0,
        alpha: 1e-5,
        admm_iterations: 50,
        pgd_iterations: 500,
        eps: EXPERIMENT_EPS,
    }
}

/// Harmonic oscillator with a cubic expert that no quadratic Lyapunov
/// function certifies.
pub fn nonlinear_control() -> Builtin {
    let sys =
        plant("[[0, 1], [-1, 0]]", "[[0], [1]]", "[x1, x2]", 2).expect("built-in system parses");
    let expert =
        parse_matrix("[[-0.1 - 0.1*x1^2, -0.1 - 0.1*x2^2]]", 2).expect("built-in expert parses");
    Builtin {
        sys,
        expert,
        d_f: 2,
        d_p: 0,
        rho: 1000.0,
        alpha: 1e-8,
        admm_iterations: 300,
        pgd_iterations: 3000,
        eps: EXPERIMENT_EPS,
    }
}

/// A user-supplied plant. Degrees default to those of the expert with
/// constant `P`; learning parameters default to the first experiment's.
pub fn custom(def: &CustomSystem) -> Result<Builtin> {
    let missing = |k: &str| Error::InvalidConfig(format!("custom experiment needs '{k}'"));
    let nvars = def.nvars.ok_or_else(|| missing("nvars"))?;
    let sys = plant(
        def.a.as_deref().ok_or_else(|| missing("a"))?,
        def.b.as_deref().ok_or_else(|| missing("b"))?,
        def.z.as_deref().ok_or_else(|| missing("z"))?,
        nvars,
    )?;
    let expert = parse_matrix(
        def.expert.as_deref().ok_or_else(|| missing("expert"))?,
        nvars,
    )?;
    if expert.shape() != (sys.m(), sys.p()) {
        return Err(Error::ShapeMismatch(format!(
            "expert is {:?}, expected {:?}",
            expert.shape(),
            (sys.m(), sys.p())
        )));
    }
    let defaults = nonlinear_system();
    Ok(Builtin {
        d_f: expert.degree(),
        d_p: 0,
        sys,
        expert,
        ..defaults
    })
}

pub fn builtin(kind: ExperimentKind, def: &CustomSystem) -> Result<Builtin> {
    match kind {
        ExperimentKind::NonlinearSystem => Ok(nonlinear_system()),
        ExperimentKind::NonlinearControl => Ok(nonlinear_control()),
        ExperimentKind::Custom => custom(def),
    }
}
