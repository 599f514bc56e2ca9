//! Loss functions: the layer-weighted detection error normalized by the ZF
//! error, and its log-L1 sparsity-regularized variant.

use super::{ForwardTrace, NetConfig, NetworkParams};

/// Floor on ‖s − s̃‖² guarding the noiseless-exact-ZF corner.
pub const DENOM_FLOOR: f64 = 1e-12;

fn err_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Σ_{r=1}^{L} ln(r) · ‖s − ŝ_r‖² / ‖s − s̃‖² over the executed layers.
/// The r=1 term contributes nothing since ln(1) = 0.
pub fn loss_weighted(trace: &ForwardTrace, s_true: &[f64]) -> f64 {
    let denom = err_sq(s_true, &trace.s_tilde).max(DENOM_FLOOR);
    trace
        .layers
        .iter()
        .enumerate()
        .map(|(q, layer)| ((q + 1) as f64).ln() * err_sq(s_true, &layer.s_hat) / denom)
        .sum()
}

/// L1 mass of layer `q` (0-indexed) touched by the profile: sublayer-1 rows
/// and sublayer-2/3 columns, each scaled by the unit's coefficient.
pub(super) fn layer_l1_mass(params: &NetworkParams, q: usize) -> f64 {
    let layer = &params.layers[q];
    let hidden = layer.beta.len();
    let mut total = 0.0;
    for j in 0..hidden {
        let beta = layer.beta.values[j];
        if beta == 0.0 {
            continue;
        }
        let mut mass = 0.0;
        for w in layer.w1.row(j) {
            mass += w.abs();
        }
        for k in 0..layer.w2.rows() {
            mass += layer.w2[(k, j)].abs();
        }
        for k in 0..layer.w3.rows() {
            mass += layer.w3[(k, j)].abs();
        }
        total += beta.abs() * mass;
    }
    total
}

/// Sparsity penalty Σ_{r=l}^{L} ln(1 + (r−1)·‖β_r ⊙ W̃_r‖₁) over the
/// executed layers (the r=1 term vanishes through the (r−1) factor).
pub fn penalty(params: &NetworkParams, cfg: &NetConfig, executed_layers: usize) -> f64 {
    let mut acc = 0.0;
    for q in (cfg.reg_start_layer - 1)..executed_layers {
        let r = (q + 1) as f64;
        acc += (1.0 + (r - 1.0) * layer_l1_mass(params, q)).ln();
    }
    acc
}

/// Weighted loss plus λ times the sparsity penalty.
pub fn loss_regularized(trace: &ForwardTrace, s_true: &[f64], params: &NetworkParams, cfg: &NetConfig) -> f64 {
    loss_weighted(trace, s_true) + cfg.lambda * penalty(params, cfg, trace.layers.len())
}
