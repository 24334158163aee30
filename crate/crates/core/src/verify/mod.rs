//! Numeric checks of Lyapunov certificates and closed-loop simulation.
//!
//! With `V(x) = Z(x)ᵀ P(x̃)⁻¹ Z(x)` and `K = F P⁻¹`, a certificate is valid
//! when `P(x̃) ⪰ ε₁I` and the stability matrix is `⪯ −ε₂I`. The grid check
//! evaluates both directly; it is a regression guard for the compiler and
//! solver, not a proof.

mod certificate;
mod matrices;
mod simulate;

pub use certificate::{
    check_certificate, contour, lyapunov_rate, lyapunov_value, CertificateReport, Grid,
    LyapunovCertificate, GRID_TOL,
};
pub use matrices::stability_matrix;
pub use simulate::{boundary_seeds, simulate, SimConfig, TrajectoryRecord};

#[cfg(test)]
mod tests;
