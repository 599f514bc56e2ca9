//! Adam optimizer with bias correction; learnable profile coefficients are
//! re-projected onto the monotone unit box and re-masked after every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{effective_profile, project_monotone_unit, Profile};

use super::{Gradients, NetConfig, NetworkParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    /// First/second moments flattened per layer in parameter order
    /// (w1, b1, w2, b2, w3, b3, beta).
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

fn layer_flat_len(params: &NetworkParams, q: usize) -> usize {
    let l = &params.layers[q];
    l.w1.data().len() + l.b1.len() + l.w2.data().len() + l.b2.len() + l.w3.data().len() + l.b3.len() + l.beta.len()
}

impl AdamState {
    pub fn new(params: &NetworkParams, lr: f64) -> Self {
        let m = (0..params.layers.len()).map(|q| vec![0.0; layer_flat_len(params, q)]).collect();
        let v = (0..params.layers.len()).map(|q| vec![0.0; layer_flat_len(params, q)]).collect();
        Self { lr, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, step: 0, m, v }
    }
}

/// One Adam update over every tensor of Φ̃. Fails on non-finite gradients,
/// naming the offending layer and tensor.
pub fn adam_step(state: &mut AdamState, params: &mut NetworkParams, grads: &Gradients, cfg: &NetConfig) -> Result<()> {
    if let Some((layer, tensor)) = grads.is_finite() {
        return Err(Error::Numerical {
            what: format!("non-finite gradient in layer {layer} tensor {tensor}"),
            residual: f64::NAN,
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let learnable = cfg.beta_is_learnable();

    for (q, (lg, lp)) in grads.layers.iter().zip(&mut params.layers).enumerate() {
        let m = &mut state.m[q];
        let v = &mut state.v[q];
        let mut idx = 0;
        let mut update = |value: &mut f64, g: f64| {
            m[idx] = state.beta1 * m[idx] + (1.0 - state.beta1) * g;
            v[idx] = state.beta2 * v[idx] + (1.0 - state.beta2) * g * g;
            let mhat = m[idx] / bc1;
            let vhat = v[idx] / bc2;
            *value -= state.lr * mhat / (vhat.sqrt() + state.epsilon);
            idx += 1;
        };
        for (p, g) in lp.w1.data_mut().iter_mut().zip(lg.w1.data()) {
            update(p, *g);
        }
        for (p, g) in lp.b1.iter_mut().zip(&lg.b1) {
            update(p, *g);
        }
        for (p, g) in lp.w2.data_mut().iter_mut().zip(lg.w2.data()) {
            update(p, *g);
        }
        for (p, g) in lp.b2.iter_mut().zip(&lg.b2) {
            update(p, *g);
        }
        for (p, g) in lp.w3.data_mut().iter_mut().zip(lg.w3.data()) {
            update(p, *g);
        }
        for (p, g) in lp.b3.iter_mut().zip(&lg.b3) {
            update(p, *g);
        }
        if learnable {
            for (p, g) in lp.beta.values.iter_mut().zip(&lg.beta) {
                update(p, *g);
            }
            let projected = project_monotone_unit(&lp.beta.values);
            let profile = Profile { values: projected, kind: lp.beta.kind, keep_fraction: lp.beta.keep_fraction };
            lp.beta = effective_profile(&profile, lp.beta.keep_fraction);
        }
        // fixed profiles: moments simply decay toward zero at their slots
    }
    params.bump_version();
    Ok(())
}
