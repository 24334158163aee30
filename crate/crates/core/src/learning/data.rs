use nalgebra::DVector;

use super::controller::LearnedController;
use crate::polynomial::{PolyMatrix, SystemDef};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Stream tag for dataset draws (initialization uses a different tag).
pub(crate) const DATA_STREAM: u64 = 0;

/// Expert demonstrations `(x̂_i, û_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub seed: u64,
    pub sigma: f64,
    pub box_halfwidth: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Draws `x̂` uniformly on `[−box, box]ⁿ` and sets
/// `û = K(x̂)Z(x̂) + ε` with `ε ~ N(0, σI)`.
///
/// Per sample, the state coordinates are drawn first, then the `m` noise
/// variates.
pub fn generate_data(
    sys: &SystemDef,
    expert: &PolyMatrix,
    n: usize,
    sigma: f64,
    box_halfwidth: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if box_halfwidth <= 0.0 || sigma < 0.0 {
        return Err(Error::InvalidConfig(
            "box half-width must be positive and sigma non-negative".into(),
        ));
    }
    if expert.shape() != (sys.m(), sys.p()) {
        return Err(Error::ShapeMismatch(format!(
            "expert gain is {:?}, expected {:?}",
            expert.shape(),
            (sys.m(), sys.p())
        )));
    }
    let std = sigma.sqrt();
    let mut rng = SplitMix64::stream(seed, DATA_STREAM);
    let mut states = Vec::with_capacity(n);
    let mut inputs = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..sys.n())
            .map(|_| rng.uniform(-box_halfwidth, box_halfwidth))
            .collect();
        let mut u = expert.eval_unchecked(&x) * sys.eval_z(&x);
        for ui in u.iter_mut() {
            *ui += std * rng.normal();
        }
        states.push(DVector::from_vec(x));
        inputs.push(u);
    }
    Ok(Dataset {
        states,
        inputs,
        seed,
        sigma,
        box_halfwidth,
    })
}

/// `(1/N) Σ ‖K(x̂_i)Z(x̂_i) − û_i‖²`.
pub fn imitation_loss(
    controller: &LearnedController,
    sys: &SystemDef,
    data: &Dataset,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (x, u) in data.states.iter().zip(&data.inputs) {
        let pi = controller.input(sys, x.as_slice())?;
        total += (pi - u).norm_squared();
    }
    Ok(total / data.len() as f64)
}
