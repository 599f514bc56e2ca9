//! Manual reverse-mode differentiation of the regularized loss with respect
//! to every trainable tensor, including the profile coefficients.
//!
//! Subgradient conventions: relu′(0) = 0; the soft-sign derivative at its
//! kink points takes the linear-region slope.

use crate::error::{Error, Result};
use crate::mat::Mat;

use super::loss::{layer_l1_mass, DENOM_FLOOR};
use super::{psi_prime, ForwardTrace, NetConfig, NetworkParams};

/// Gradient mirror of one layer's parameters.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| LayerGrads {
                w1: Mat::zeros(l.w1.rows(), l.w1.cols()),
                b1: vec![0.0; l.b1.len()],
                w2: Mat::zeros(l.w2.rows(), l.w2.cols()),
                b2: vec![0.0; l.b2.len()],
                w3: Mat::zeros(l.w3.rows(), l.w3.cols()),
                b3: vec![0.0; l.b3.len()],
                beta: vec![0.0; l.beta.len()],
            })
            .collect();
        Gradients { layers }
    }

    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0;
        for l in &self.layers {
            for m in [l.w1.data(), l.w2.data(), l.w3.data()] {
                acc += m.iter().map(|x| x * x).sum::<f64>();
            }
            for v in [&l.b1, &l.b2, &l.b3, &l.beta] {
                acc += v.iter().map(|x| x * x).sum::<f64>();
            }
        }
        acc.sqrt()
    }

    pub fn scale(&mut self, f: f64) {
        for l in &mut self.layers {
            for v in l.w1.data_mut() {
                *v *= f;
            }
            for v in l.w2.data_mut() {
                *v *= f;
            }
            for v in l.w3.data_mut() {
                *v *= f;
            }
            for v in l.b1.iter_mut().chain(&mut l.b2).chain(&mut l.b3).chain(&mut l.beta) {
                *v *= f;
            }
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.w1.data_mut().iter_mut().zip(b.w1.data()) {
                *x += y;
            }
            for (x, y) in a.w2.data_mut().iter_mut().zip(b.w2.data()) {
                *x += y;
            }
            for (x, y) in a.w3.data_mut().iter_mut().zip(b.w3.data()) {
                *x += y;
            }
            for (x, y) in a.b1.iter_mut().zip(&b.b1) {
                *x += y;
            }
            for (x, y) in a.b2.iter_mut().zip(&b.b2) {
                *x += y;
            }
            for (x, y) in a.b3.iter_mut().zip(&b.b3) {
                *x += y;
            }
            for (x, y) in a.beta.iter_mut().zip(&b.beta) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> Option<(usize, &'static str)> {
        for (q, l) in self.layers.iter().enumerate() {
            if !l.w1.is_finite() {
                return Some((q, "w1"));
            }
            if !l.w2.is_finite() {
                return Some((q, "w2"));
            }
            if !l.w3.is_finite() {
                return Some((q, "w3"));
            }
            if l.b1.iter().chain(&l.b2).chain(&l.b3).any(|v| !v.is_finite()) {
                return Some((q, "bias"));
            }
            if l.beta.iter().any(|v| !v.is_finite()) {
                return Some((q, "beta"));
            }
        }
        None
    }
}

/// Gradients of the data term (the layer-weighted normalized error) for one
/// sample, accumulated into `grads`.
pub(super) fn backward_data_into(
    trace: &ForwardTrace,
    s_true: &[f64],
    params: &NetworkParams,
    cfg: &NetConfig,
    grads: &mut Gradients,
) -> Result<()> {
    if trace.params_version != params.version {
        return Err(Error::Contract(format!(
            "stale trace: params version {} but trace was produced at version {}",
            params.version, trace.params_version
        )));
    }
    let d = cfg.d();
    let hidden = cfg.hidden();
    let aux = cfg.aux();
    let input = cfg.input_dim();
    let level = cfg.constellation.level();
    let executed = trace.layers.len();

    let denom = {
        let e: f64 = s_true.iter().zip(&trace.s_tilde).map(|(a, b)| (a - b) * (a - b)).sum();
        e.max(DENOM_FLOOR)
    };

    // carried gradients w.r.t. the layer outputs consumed downstream
    let mut g_s = vec![0.0; d];
    let mut g_a = vec![0.0; aux];

    for q in (0..executed).rev() {
        let lt = &trace.layers[q];
        let lp = &params.layers[q];
        let lg = &mut grads.layers[q];
        let weight = ((q + 1) as f64).ln();

        // direct loss term plus carry from layer q+1
        let mut gs_total = vec![0.0; d];
        for i in 0..d {
            gs_total[i] = g_s[i] + 2.0 * weight * (lt.s_hat[i] - s_true[i]) / denom;
        }

        // detection sublayer
        let mut g_v = vec![0.0; d];
        for i in 0..d {
            g_v[i] = gs_total[i] * psi_prime(lt.v[i], cfg.psi_t, level);
        }
        let mut g_ut = vec![0.0; hidden];
        for k in 0..d {
            let gv = g_v[k];
            lg.b2[k] += gv;
            let row = lp.w2.row(k);
            for j in 0..hidden {
                g_ut[j] += row[j] * gv;
            }
            let grow = &mut lg.w2.data_mut()[k * hidden..(k + 1) * hidden];
            for j in 0..hidden {
                grow[j] += gv * lt.u_tilde[j];
            }
        }

        // auxiliary sublayer
        for k in 0..aux {
            let ga = g_a[k];
            lg.b3[k] += ga;
            let row = lp.w3.row(k);
            for j in 0..hidden {
                g_ut[j] += row[j] * ga;
            }
            let grow = &mut lg.w3.data_mut()[k * hidden..(k + 1) * hidden];
            for j in 0..hidden {
                grow[j] += ga * lt.u_tilde[j];
            }
        }

        // profile scaling: ũ = β ⊙ u
        let mut g_u = vec![0.0; hidden];
        for j in 0..hidden {
            lg.beta[j] += g_ut[j] * lt.u[j];
            let b = lp.beta.values[j];
            g_u[j] = if b == 0.0 { 0.0 } else { b * g_ut[j] };
        }

        // hidden sublayer
        let mut g_x = vec![0.0; input];
        for j in 0..hidden {
            let gz = if lt.z[j] > 0.0 { g_u[j] } else { 0.0 };
            if gz == 0.0 {
                continue;
            }
            lg.b1[j] += gz;
            let row = lp.w1.row(j);
            for i in 0..input {
                g_x[i] += row[i] * gz;
            }
            let grow = &mut lg.w1.data_mut()[j * input..(j + 1) * input];
            for i in 0..input {
                grow[i] += gz * lt.x[i];
            }
        }

        // through the optional input profile back to the raw concatenation
        if let Some(gamma) = &trace.input_profile {
            for i in 0..input {
                let g = gamma.values[i];
                g_x[i] = if g == 0.0 { 0.0 } else { g * g_x[i] };
            }
        }

        // split the concatenation: (Hᵀy | HᵀH s | s | a)
        let g2 = &g_x[d..2 * d];
        let g3 = &g_x[2 * d..3 * d];
        let g4 = &g_x[3 * d..5 * d];
        let hth_g2 = trace.hth.matvec(g2); // HᵀH symmetric
        for i in 0..d {
            g_s[i] = hth_g2[i] + g3[i];
        }
        g_a.copy_from_slice(g4);
    }
    Ok(())
}

/// Subgradient of |x| with sgn(0) = 0, matching central finite differences.
#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradients of the sparsity penalty (without the λ factor) over the first
/// `executed_layers` layers, accumulated into `grads`.
pub fn penalty_gradients(params: &NetworkParams, cfg: &NetConfig, executed_layers: usize, grads: &mut Gradients) {
    for q in (cfg.reg_start_layer - 1)..executed_layers {
        let rm1 = q as f64; // (r − 1)
        if rm1 == 0.0 {
            continue;
        }
        let mass = layer_l1_mass(params, q);
        let scale = rm1 / (1.0 + rm1 * mass);
        let lp = &params.layers[q];
        let lg = &mut grads.layers[q];
        let hidden = lp.beta.len();
        for j in 0..hidden {
            let beta = lp.beta.values[j];
            // d/dβ_j: the unit's absolute weight mass
            let mut unit_mass = 0.0;
            for w in lp.w1.row(j) {
                unit_mass += w.abs();
            }
            for k in 0..lp.w2.rows() {
                unit_mass += lp.w2[(k, j)].abs();
            }
            for k in 0..lp.w3.rows() {
                unit_mass += lp.w3[(k, j)].abs();
            }
            lg.beta[j] += scale * unit_mass * sgn(beta);
            if beta == 0.0 {
                continue; // masked units contribute no weight gradient
            }
            let f = scale * beta.abs();
            let input = lp.w1.cols();
            let grow = &mut lg.w1.data_mut()[j * input..(j + 1) * input];
            for (g, w) in grow.iter_mut().zip(lp.w1.row(j)) {
                *g += f * sgn(*w);
            }
            for k in 0..lp.w2.rows() {
                lg.w2[(k, j)] += f * sgn(lp.w2[(k, j)]);
            }
            for k in 0..lp.w3.rows() {
                lg.w3[(k, j)] += f * sgn(lp.w3[(k, j)]);
            }
        }
    }
}

/// Full gradient of [`super::loss_regularized`] for a single sample.
pub fn backward(trace: &ForwardTrace, s_true: &[f64], params: &NetworkParams, cfg: &NetConfig) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(params);
    backward_data_into(trace, s_true, params, cfg, &mut grads)?;
    if cfg.lambda > 0.0 {
        let mut pen = Gradients::zeros_like(params);
        penalty_gradients(params, cfg, trace.layers.len(), &mut pen);
        pen.scale(cfg.lambda);
        grads.add(&pen);
    }
    Ok(grads)
}
