use nalgebra::DVector;

use super::certificate::{lyapunov_value, LyapunovCertificate};
use crate::learning::LearnedController;
use crate::polynomial::SystemDef;
use crate::{Error, Result};

/// Norm beyond which a trajectory is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Keep every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 1e-3,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// `V` at each recorded state; NaN when simulated without a certificate.
    pub v_values: Vec<f64>,
    pub diverged: bool,
}

/// Fixed-step classical Runge–Kutta on `ẋ = A Z + B u`, `u = K(x)Z(x)`.
pub fn simulate(
    sys: &SystemDef,
    controller: &LearnedController,
    cert: Option<&LyapunovCertificate>,
    x0: &[f64],
    cfg: &SimConfig,
) -> Result<TrajectoryRecord> {
    sys.check_state(x0)?;
    if !(cfg.dt > 0.0) || cfg.t_end < cfg.dt || cfg.record_every == 0 {
        return Err(Error::InvalidConfig(
            "simulation needs dt > 0, t_end >= dt and record_every >= 1".into(),
        ));
    }
    let rhs = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let u = controller.input(sys, x.as_slice())?;
        Ok(sys.dynamics(x.as_slice(), &u))
    };
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        inputs: Vec::new(),
        v_values: Vec::new(),
        diverged: false,
    };
    let push = |rec: &mut TrajectoryRecord, t: f64, x: &DVector<f64>| -> Result<()> {
        rec.times.push(t);
        rec.inputs.push(controller.input(sys, x.as_slice())?);
        rec.v_values.push(match cert {
            Some(c) => lyapunov_value(sys, c, x.as_slice())?,
            None => f64::NAN,
        });
        rec.states.push(x.clone());
        Ok(())
    };
    let mut x = DVector::from_column_slice(x0);
    push(&mut rec, 0.0, &x)?;
    let h = cfg.dt;
    for step in 1..=steps {
        let k1 = rhs(&x)?;
        let k2 = rhs(&(&x + &k1 * (h / 2.0)))?;
        let k3 = rhs(&(&x + &k2 * (h / 2.0)))?;
        let k4 = rhs(&(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t = step as f64 * h;
        if !x.iter().all(|v| v.is_finite()) || x.norm() > DIVERGENCE_NORM {
            rec.diverged = true;
            break;
        }
        if step % cfg.record_every == 0 || step == steps {
            push(&mut rec, t, &x)?;
        }
    }
    Ok(rec)
}

/// `count` points evenly spaced along the boundary of `[lo, hi]²`, starting
/// at the corner `(lo, lo)` and running counter-clockwise.
pub fn boundary_seeds(lo: f64, hi: f64, count: usize) -> Vec<[f64; 2]> {
    let side = hi - lo;
    (0..count)
        .map(|i| {
            let s = 4.0 * side * i as f64 / count as f64;
            let (edge, d) = ((s / side).floor() as usize, s % side);
            match edge {
                0 => [lo + d, lo],
                1 => [hi, lo + d],
                2 => [hi - d, hi],
                _ => [lo, hi - d],
            }
        })
        .collect()
}
