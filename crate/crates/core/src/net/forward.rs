//! Forward recursion of the unfolded detector, with an instrumented
//! multiply-accumulate counter and a sparse fast path that skips masked
//! hidden units bit-exactly.

use crate::complexity::MacCounter;
use crate::detectors::DetectorResult;
use crate::env::hard_slice;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::profile::{effective_profile, half_exp_profile, linear_profile, Profile, ProfileKind};

use super::{psi_scalar, relu, NetConfig, NetworkParams};

/// Cached activations of one executed layer.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    /// Concatenated input, 5d (after input-profile scaling when enabled).
    pub x: Vec<f64>,
    /// Pre-activation of sublayer 1, 8d.
    pub z: Vec<f64>,
    /// relu(z), 8d.
    pub u: Vec<f64>,
    /// Profile-scaled hidden vector β ⊙ u, 8d.
    pub u_tilde: Vec<f64>,
    /// Pre-activation of the detection sublayer, d.
    pub v: Vec<f64>,
    /// Detection output ψ(v), d.
    pub s_hat: Vec<f64>,
    /// Auxiliary output, 2d.
    pub a_hat: Vec<f64>,
}

/// Full forward cache for backpropagation and diagnostics.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub layers: Vec<LayerTrace>,
    pub hty: Vec<f64>,
    pub hth: Mat,
    /// ZF soft solution s̃, the loss normalizer.
    pub s_tilde: Vec<f64>,
    pub macs: MacCounter,
    pub params_version: u64,
    pub input_profile: Option<Profile>,
}

impl ForwardTrace {
    /// Detection output of the last executed layer.
    pub fn final_s_hat(&self) -> &[f64] {
        &self.layers.last().expect("at least one layer executed").s_hat
    }
}

fn input_profile(cfg: &NetConfig) -> Result<Option<Profile>> {
    if !cfg.input_profile_mode {
        return Ok(None);
    }
    let n = cfg.input_dim();
    let p = match cfg.profile_kind {
        ProfileKind::Linear => linear_profile(n),
        ProfileKind::HalfExponential | ProfileKind::Learnable => half_exp_profile(n)?,
    };
    Ok(Some(effective_profile(&p, cfg.keep_fraction)))
}

/// Runs `layers_to_run` layers of the recursion from s₀ = 0, a₀ = 0.
///
/// `skip_masked` selects the sparse fast path that never touches hidden
/// units whose profile coefficient is exactly 0; outputs are bit-identical
/// either way (the dense path is what training differentiates through, since
/// it materializes `u` for the profile gradient).
pub fn network_forward(
    params: &NetworkParams,
    h: &Mat,
    y: &[f64],
    cfg: &NetConfig,
    layers_to_run: usize,
    skip_masked: bool,
) -> Result<ForwardTrace> {
    if layers_to_run == 0 || layers_to_run > params.layers.len() {
        return Err(Error::Contract(format!(
            "layers_to_run must be in 1..={}, got {layers_to_run}",
            params.layers.len()
        )));
    }
    let d = cfg.d();
    if h.cols() != d || h.rows() != 2 * cfg.nr || y.len() != h.rows() {
        return Err(Error::Contract(format!(
            "channel/observation shapes ({}×{}, y {}) do not match config (d={}, 2Nr={})",
            h.rows(),
            h.cols(),
            y.len(),
            d,
            2 * cfg.nr
        )));
    }
    let hidden = cfg.hidden();
    let aux = cfg.aux();
    let input = cfg.input_dim();
    let m = h.rows();
    let mut macs = MacCounter::default();

    // shared precomputations: Hᵀy, HᵀH, and the ZF normalizer
    let hty = h.tr_matvec(y);
    macs.overhead += (2 * m * d) as u64;
    let hth = h.gram();
    macs.overhead += (d * (d + 1) * m) as u64; // 2m ops per unique entry
    let s_tilde = crate::detectors::zf_soft(h, y)?;

    let gamma = input_profile(cfg)?;

    let mut s_prev = vec![0.0; d];
    let mut a_prev = vec![0.0; aux];
    let mut layers = Vec::with_capacity(layers_to_run);

    for layer in params.layers.iter().take(layers_to_run) {
        debug_assert_eq!(layer.w1.rows(), hidden);
        debug_assert_eq!(layer.w1.cols(), input);

        // x = Π(Hᵀy, HᵀH s, s, a)
        let mut x = Vec::with_capacity(input);
        x.extend_from_slice(&hty);
        let hth_s = hth.matvec(&s_prev);
        macs.overhead += (2 * d * d) as u64;
        x.extend_from_slice(&hth_s);
        x.extend_from_slice(&s_prev);
        x.extend_from_slice(&a_prev);
        if let Some(g) = &gamma {
            x = crate::profile::apply_profile(&x, g)?;
        }

        let beta = &layer.beta.values;
        let active = |j: usize| !skip_masked || beta[j] != 0.0;

        // sublayer 1: z = W1 x + b1, u = relu(z), ũ = β ⊙ u
        let mut z = vec![0.0; hidden];
        let mut u = vec![0.0; hidden];
        let mut u_tilde = vec![0.0; hidden];
        for j in 0..hidden {
            if !active(j) {
                continue;
            }
            let row = layer.w1.row(j);
            let mut acc = 0.0;
            for i in 0..input {
                acc += row[i] * x[i];
            }
            macs.hidden_gated += (2 * input) as u64; // input mults, input−1 sums, 1 bias add
            z[j] = acc + layer.b1[j];
            u[j] = relu(z[j]);
            u_tilde[j] = if beta[j] == 0.0 { 0.0 } else { beta[j] * u[j] };
        }

        // sublayer 2 (detection): ŝ = ψ(W2 ũ + b2)
        let mut v = vec![0.0; d];
        for (k, vk) in v.iter_mut().enumerate() {
            let row = layer.w2.row(k);
            let mut acc = 0.0;
            for j in 0..hidden {
                if !active(j) {
                    continue;
                }
                acc += row[j] * u_tilde[j];
                macs.hidden_gated += 2;
            }
            *vk = acc + layer.b2[k];
        }
        let s_hat: Vec<f64> = v.iter().map(|&vi| psi_scalar(vi, cfg.psi_t, cfg.constellation.level())).collect();

        // sublayer 3 (auxiliary): â = W3 ũ + b3
        let mut a_hat = vec![0.0; aux];
        for (k, ak) in a_hat.iter_mut().enumerate() {
            let row = layer.w3.row(k);
            let mut acc = 0.0;
            for j in 0..hidden {
                if !active(j) {
                    continue;
                }
                acc += row[j] * u_tilde[j];
                macs.hidden_gated += 2;
            }
            *ak = acc + layer.b3[k];
        }

        s_prev.copy_from_slice(&s_hat);
        a_prev.copy_from_slice(&a_hat);
        layers.push(LayerTrace { x, z, u, u_tilde, v, s_hat, a_hat });
    }

    Ok(ForwardTrace {
        layers,
        hty,
        hth,
        s_tilde,
        macs,
        params_version: params.version,
        input_profile: gamma,
    })
}

/// Inference entry point: run (optionally truncated) layers on the sparse
/// path and slice the final detection output.
pub fn detect(
    params: &NetworkParams,
    h: &Mat,
    y: &[f64],
    cfg: &NetConfig,
    layers_to_run: usize,
) -> Result<DetectorResult> {
    let trace = network_forward(params, h, y, cfg, layers_to_run, true)?;
    let soft = trace.final_s_hat().to_vec();
    let hard = hard_slice(&soft, cfg.constellation);
    let hs = h.matvec(&hard);
    let objective = y.iter().zip(&hs).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(DetectorResult { soft, hard, objective })
}

/// Reference single-layer step of the plain (unscaled) unfolded detector,
/// written as a straight-line evaluation of the four sublayer equations.
/// Shares weights but no code with the scaled path; used by equivalence
/// tests.
pub fn layer_forward_unscaled(
    w1: &Mat,
    b1: &[f64],
    w2: &Mat,
    b2: &[f64],
    w3: &Mat,
    b3: &[f64],
    hty: &[f64],
    hth: &Mat,
    s_prev: &[f64],
    a_prev: &[f64],
    psi_t: f64,
    level: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut x = hty.to_vec();
    x.extend(hth.matvec(s_prev));
    x.extend_from_slice(s_prev);
    x.extend_from_slice(a_prev);
    let u: Vec<f64> = w1
        .matvec(&x)
        .iter()
        .zip(b1)
        .map(|(wx, b)| relu(wx + b))
        .collect();
    let s_hat: Vec<f64> = w2
        .matvec(&u)
        .iter()
        .zip(b2)
        .map(|(wu, b)| psi_scalar(wu + b, psi_t, level))
        .collect();
    let a_hat: Vec<f64> = w3.matvec(&u).iter().zip(b3).map(|(wu, b)| wu + b).collect();
    (s_hat, a_hat)
}
