use nalgebra::{DMatrix, DVector};

use super::matrices::stability_matrix;
use crate::learning::LearnedController;
use crate::linalg::{inverse, SymmetricEigen};
use crate::par;
use crate::polynomial::{PolyMatrix, SystemDef};
use crate::sos::Epsilons;
use crate::{Error, Result};

/// Slack allowed on both eigenvalue conditions in [`check_certificate`].
pub const GRID_TOL: f64 = 1e-8;

/// `P(x̃)`, `F(x)` and the margins they were certified with.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCertificate {
    pub p: PolyMatrix,
    pub f: PolyMatrix,
    pub eps: Epsilons,
}

impl LyapunovCertificate {
    pub fn new(sys: &SystemDef, p: PolyMatrix, f: PolyMatrix, eps: Epsilons) -> Result<Self> {
        if p.shape() != (sys.p(), sys.p()) || f.shape() != (sys.m(), sys.p()) {
            return Err(Error::ShapeMismatch(format!(
                "P is {:?} and F is {:?} for p = {}, m = {}",
                p.shape(),
                f.shape(),
                sys.p(),
                sys.m()
            )));
        }
        if !p.is_symmetric(0.0) {
            return Err(Error::ShapeMismatch("P is not symmetric".into()));
        }
        if let Some(v) = p
            .variables()
            .into_iter()
            .find(|v| !sys.reduced_vars().contains(v))
        {
            return Err(Error::InvalidSystem(format!(
                "P depends on x{} whose row of B is not identically zero",
                v + 1
            )));
        }
        Ok(Self { p, f, eps })
    }

    /// The controller `K = F P⁻¹` this certificate proves stabilizing.
    pub fn controller(&self) -> Result<LearnedController> {
        crate::learning::extract_controller(&self.f, &self.p)
    }
}

/// Uniform tensor grid on `[lo, hi]ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points_per_axis: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            lo: -10.0,
            hi: 10.0,
            points_per_axis: 41,
        }
    }
}

impl Grid {
    pub fn axis(&self) -> Vec<f64> {
        let k = self.points_per_axis;
        if k == 1 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        (0..k)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (k - 1) as f64)
            .collect()
    }

    /// All grid points, first coordinate varying slowest.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let axis = self.axis();
        let total = axis.len().pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut x = vec![0.0; n];
                for slot in x.iter_mut().rev() {
                    *slot = axis[idx % axis.len()];
                    idx /= axis.len();
                }
                x
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Smallest eigenvalue of `P(x̃)` over the grid.
    pub min_eig_p: f64,
    /// Largest eigenvalue of the stability matrix over the grid.
    pub max_eig_s: f64,
    pub worst_p_point: Vec<f64>,
    pub worst_s_point: Vec<f64>,
    pub points: usize,
    pub pass: bool,
    /// `P` is constant, so the sum-of-squares certificate is global rather
    /// than grid-only evidence.
    pub global: bool,
}

/// Evaluates `P(x̃)` and the stability matrix at every grid point.
///
/// Passes iff `λ_min(P) ≥ ε₁ − tol` and `λ_max(S) ≤ −ε₂ + tol` everywhere,
/// with `tol` = [`GRID_TOL`].
pub fn check_certificate(
    sys: &SystemDef,
    cert: &LyapunovCertificate,
    grid: &Grid,
) -> Result<CertificateReport> {
    if grid.points_per_axis == 0 || grid.hi < grid.lo {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    let points = grid.points(sys.n());
    let evals = par::map(&points, |x| -> Result<(f64, f64)> {
        let pm = cert.p.eval_unchecked(x);
        let s = stability_matrix(sys, &cert.p, &cert.f, x);
        Ok((
            SymmetricEigen::new(&pm)?.min_eigenvalue(),
            SymmetricEigen::new(&s)?.max_eigenvalue(),
        ))
    });
    let mut report = CertificateReport {
        min_eig_p: f64::INFINITY,
        max_eig_s: f64::NEG_INFINITY,
        worst_p_point: Vec::new(),
        worst_s_point: Vec::new(),
        points: points.len(),
        pass: false,
        global: cert.p.degree() == 0,
    };
    for (x, ev) in points.iter().zip(evals) {
        let (lp, ls) = ev?;
        // NaN compares false, so a NaN eigenvalue is caught by the pass test.
        if !(lp >= report.min_eig_p) {
            report.min_eig_p = lp;
            report.worst_p_point = x.clone();
        }
        if !(ls <= report.max_eig_s) {
            report.max_eig_s = ls;
            report.worst_s_point = x.clone();
        }
    }
    report.pass = report.min_eig_p >= cert.eps.eps1 - GRID_TOL
        && report.max_eig_s <= -cert.eps.eps2 + GRID_TOL;
    Ok(report)
}

/// `V(x) = Zᵀ P(x̃)⁻¹ Z`.
pub fn lyapunov_value(sys: &SystemDef, cert: &LyapunovCertificate, x: &[f64]) -> Result<f64> {
    sys.check_state(x)?;
    let z = sys.eval_z(x);
    let pinv = inverse(&cert.p.eval_unchecked(x))?;
    Ok(z.dot(&(pinv * &z)))
}

/// `V̇(x)` along `ẋ = [A + B F P⁻¹] Z`, using `d(P⁻¹) = −P⁻¹ (dP) P⁻¹`.
pub fn lyapunov_rate(sys: &SystemDef, cert: &LyapunovCertificate, x: &[f64]) -> Result<f64> {
    sys.check_state(x)?;
    let z = sys.eval_z(x);
    let pinv = inverse(&cert.p.eval_unchecked(x))?;
    let k = cert.f.eval_unchecked(x) * &pinv;
    let xdot: DVector<f64> = (sys.eval_a(x) + sys.eval_b(x) * k) * &z;
    let zdot = sys.eval_m(x) * &xdot;
    let mut pdot = DMatrix::zeros(sys.p(), sys.p());
    for &j in sys.reduced_vars() {
        let dp = cert.p.partial(j);
        if !dp.is_zero() {
            pdot += dp.eval_unchecked(x) * xdot[j];
        }
    }
    let y = &pinv * &z;
    Ok(2.0 * y.dot(&zdot) - y.dot(&(pdot * &y)))
}

/// `(x1, x2, V)` over a two-dimensional grid, `x1` varying slowest.
pub fn contour(sys: &SystemDef, cert: &LyapunovCertificate, grid: &Grid) -> Result<Vec<[f64; 3]>> {
    if sys.n() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: sys.n(),
        });
    }
    let points = grid.points(2);
    par::map(&points, |x| {
        lyapunov_value(sys, cert, x).map(|v| [x[0], x[1], v])
    })
    .into_iter()
    .collect()
}
