//! Seeded experiment sweeps and their artifacts.
//!
//! A sweep runs one algorithm on one plant for every `(N, seed)` pair. Each
//! run writes to its own directory:
//!
//! * `loss.csv`: `iteration,loss,certified_loss`, iteration 0 being the
//!   initialization. `loss` tracks `{K_i}` for ADMM and `F P⁻¹` for PGD;
//!   `certified_loss` is always `F P⁻¹`.
//! * `coefficients.txt`: the final `{K_i}` iterate (ADMM), the certified
//!   controller `K = F P⁻¹` when it is polynomial, and `F`, `P`.
//! * `certificate.txt`: margins, `P`, `F` and the grid report; see
//!   [`load_certificate`].
//! * `contour.csv` (`x1,x2,v`) and `trajectory_NN.csv` (`t,x1,x2,u1,v`) for
//!   two-state plants.
//!
//! The sweep root holds `loss_traces.csv` (`algorithm,N,seed,iteration,loss`)
//! and `manifest.txt` with the resolved config, its SHA-256 and per-run
//! status.

mod artifacts;
mod builtin;
mod config;
mod run;

pub use artifacts::{fmt_f64, load_certificate, parse_certificate, StoredCertificate};
pub use builtin::{builtin, custom, nonlinear_control, nonlinear_system, Builtin, EXPERIMENT_EPS};
pub use config::{
    Algorithm, CustomSystem, ExperimentConfig, ExperimentKind, ResolvedConfig, DEFAULT_OUTPUT_DIR,
    OUTPUT_DIR_ENV,
};
pub use run::{
    config_hash, figure_csv, manifest_text, resolve, run_experiment, run_name, RunResult,
    SweepReport, FIGURE_FILE, MANIFEST_FILE,
};

#[cfg(test)]
mod tests;
