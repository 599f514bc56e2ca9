//! End-to-end behavioral checks on the unfolded network: equivalence with a
//! straight-line reference implementation, truncation semantics, exactness of
//! the sparse fast path, and full finite-difference gradient verification.

use wesnet_core::env::{draw_channel, draw_symbols};
use wesnet_core::net::{layer_forward_unscaled, penalty};
use wesnet_core::{
    backward, loss_regularized, loss_weighted, network_forward,
    xavier_init, Constellation, ForwardTrace, Mat, MacCounter, NetConfig, NetworkParams, Profile,
    ProfileKind, RngStream,
};

fn bpsk_cfg(nt: usize, nr: usize, layers: usize) -> NetConfig {
    let mut cfg = NetConfig::new(nt, nr, Constellation::Bpsk);
    cfg.layers = layers;
    cfg
}

fn sample_problem(seed: u64, nt: usize, nr: usize) -> (Mat, Vec<f64>, Vec<f64>) {
    let mut rng = RngStream::root(seed).rng();
    let ch = draw_channel(&mut rng, nt, nr, Constellation::Bpsk);
    let s = draw_symbols(&mut rng, nt, Constellation::Bpsk);
    let mut y = ch.h_real.matvec(&s);
    use rand_distr::{Distribution, StandardNormal};
    for v in &mut y {
        let n: f64 = StandardNormal.sample(&mut rng);
        *v += 0.1 * n;
    }
    (ch.h_real, y, s)
}

/// With β ≡ 1 the scaled network must match the unscaled reference chain
/// bit for bit, in both the dense and the sparse execution paths.
#[test]
fn all_ones_profile_matches_unscaled_reference_bitwise() {
    let cfg = bpsk_cfg(3, 6, 5);
    let mut params = xavier_init(RngStream::root(11), &cfg).unwrap();
    for l in &mut params.layers {
        l.beta = Profile::ones(l.beta.len());
    }
    params.bump_version();
    let (h, y, _) = sample_problem(12, 3, 6);

    for skip in [false, true] {
        let trace = network_forward(&params, &h, &y, &cfg, cfg.layers, skip).unwrap();
        let mut s_prev = vec![0.0; cfg.d()];
        let mut a_prev = vec![0.0; cfg.aux()];
        for (r, lt) in trace.layers.iter().enumerate() {
            let l = &params.layers[r];
            let (s_hat, a_hat) = layer_forward_unscaled(
                &l.w1,
                &l.b1,
                &l.w2,
                &l.b2,
                &l.w3,
                &l.b3,
                &trace.hty,
                &trace.hth,
                &s_prev,
                &a_prev,
                cfg.psi_t,
                cfg.constellation.level(),
            );
            assert_eq!(lt.s_hat, s_hat, "layer {r}, skip={skip}");
            assert_eq!(lt.a_hat, a_hat, "layer {r}, skip={skip}");
            s_prev = s_hat;
            a_prev = a_hat;
        }
    }
}

/// Running the first k layers is exactly the prefix of the full run.
#[test]
fn truncation_is_a_prefix_of_the_full_run() {
    let cfg = bpsk_cfg(2, 4, 6);
    let params = xavier_init(RngStream::root(21), &cfg).unwrap();
    let (h, y, _) = sample_problem(22, 2, 4);
    let full = network_forward(&params, &h, &y, &cfg, 6, false).unwrap();
    for k in 1..=6 {
        let part = network_forward(&params, &h, &y, &cfg, k, false).unwrap();
        assert_eq!(part.layers.len(), k);
        for r in 0..k {
            assert_eq!(part.layers[r].s_hat, full.layers[r].s_hat);
            assert_eq!(part.layers[r].a_hat, full.layers[r].a_hat);
        }
    }
}

/// The sparse fast path (never touching masked units) is bit-identical to the
/// dense path, and its gated MAC count drops by exactly 16d per masked unit.
#[test]
fn masked_unit_skipping_is_exact_and_accounted() {
    let mut cfg = bpsk_cfg(3, 6, 4);
    cfg.keep_fraction = 0.5;
    let params = xavier_init(RngStream::root(31), &cfg).unwrap();
    let (h, y, _) = sample_problem(32, 3, 6);

    let dense = network_forward(&params, &h, &y, &cfg, cfg.layers, false).unwrap();
    let sparse = network_forward(&params, &h, &y, &cfg, cfg.layers, true).unwrap();
    for (a, b) in dense.layers.iter().zip(&sparse.layers) {
        assert_eq!(a.s_hat, b.s_hat);
        assert_eq!(a.a_hat, b.a_hat);
        assert_eq!(a.u_tilde, b.u_tilde);
    }

    let d = cfg.d() as u64;
    let zeroed: u64 = params.layers.iter().map(|l| l.beta.zero_count() as u64).sum();
    assert!(zeroed > 0, "test needs some masked units");
    assert_eq!(dense.macs.overhead, sparse.macs.overhead);
    assert_eq!(dense.macs.hidden_gated - sparse.macs.hidden_gated, 16 * d * zeroed);
}

/// ψ keeps every detection output within the constellation amplitude.
#[test]
fn detection_outputs_are_bounded_by_the_level() {
    for cons in [Constellation::Bpsk, Constellation::Qam4] {
        let mut cfg = NetConfig::new(3, 6, cons);
        cfg.layers = 4;
        let params = xavier_init(RngStream::root(41), &cfg).unwrap();
        let mut rng = RngStream::root(42).rng();
        let ch = draw_channel(&mut rng, 3, 6, cons);
        let s = draw_symbols(&mut rng, cfg.d(), cons);
        let y = ch.h_real.matvec(&s);
        let trace = network_forward(&params, &ch.h_real, &y, &cfg, cfg.layers, false).unwrap();
        let level = cons.level();
        for lt in &trace.layers {
            assert!(lt.s_hat.iter().all(|v| v.abs() <= level + 1e-12));
        }
    }
}

/// Input-profile mode scales the concatenated input; at layer 0 the input is
/// [Hᵀy, 0, 0, 0], so the trace must show the profile applied to it.
#[test]
fn input_profile_mode_scales_the_concatenation() {
    let mut cfg = bpsk_cfg(2, 4, 2);
    cfg.input_profile_mode = true;
    cfg.keep_fraction = 0.5;
    let params = xavier_init(RngStream::root(51), &cfg).unwrap();
    let (h, y, _) = sample_problem(52, 2, 4);
    let trace = network_forward(&params, &h, &y, &cfg, cfg.layers, false).unwrap();
    let profile = trace.input_profile.as_ref().expect("profile recorded");
    assert_eq!(profile.len(), cfg.input_dim());
    let x0 = &trace.layers[0].x;
    for i in 0..cfg.input_dim() {
        let raw = if i < trace.hty.len() { trace.hty[i] } else { 0.0 };
        assert_eq!(x0[i], profile.values[i] * raw);
    }
}

fn fake_trace(s_hats: Vec<Vec<f64>>, s_tilde: Vec<f64>, version: u64, d: usize) -> ForwardTrace {
    let layers = s_hats
        .into_iter()
        .map(|s_hat| wesnet_core::net::LayerTrace {
            x: vec![0.0; 5 * d],
            z: vec![0.0; 8 * d],
            u: vec![0.0; 8 * d],
            u_tilde: vec![0.0; 8 * d],
            v: vec![0.0; d],
            s_hat,
            a_hat: vec![0.0; 2 * d],
        })
        .collect();
    ForwardTrace {
        layers,
        hty: vec![0.0; d],
        hth: Mat::zeros(d, d),
        s_tilde,
        macs: MacCounter::default(),
        params_version: version,
        input_profile: None,
    }
}

/// Hand-computed loss values: with two layers only the second term survives
/// (ln 1 = 0), so the loss is ln 2 times the relative squared error.
#[test]
fn weighted_loss_hand_example() {
    // s = [1, 1], s̃ = [0, 0] → denom = 2; second-layer ŝ = [0, 1] → err² = 1
    let s = vec![1.0, 1.0];
    let trace = fake_trace(vec![vec![0.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0], 0, 2);
    let got = loss_weighted(&trace, &s);
    let expected = 2f64.ln() * 0.5;
    assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
}

/// Hand-computed penalty: one layer at r=2 with unit β and total weight mass
/// 3 contributes ln(1 + (2−1)·3) = ln 4.
#[test]
fn penalty_hand_example() {
    let mut cfg = bpsk_cfg(1, 2, 2);
    cfg.lambda = 0.1;
    cfg.reg_start_layer = 2;
    let mut params = xavier_init(RngStream::root(61), &cfg).unwrap();
    for l in &mut params.layers {
        for w in l.w1.data_mut() {
            *w = 0.0;
        }
        for w in l.w2.data_mut() {
            *w = 0.0;
        }
        for w in l.w3.data_mut() {
            *w = 0.0;
        }
        l.beta = Profile::ones(l.beta.len());
    }
    // put mass 3 on hidden unit 0 of the second layer: |W1 row| + |W2 col| + |W3 col|
    params.layers[1].w1[(0, 0)] = 1.0;
    params.layers[1].w2[(0, 0)] = -1.5;
    params.layers[1].w3[(0, 0)] = 0.5;
    params.bump_version();
    let p = penalty(&params, &cfg, 2);
    assert!((p - 4f64.ln()).abs() < 1e-15, "{p}");
}

/// Gradients of masked hidden units must be exactly zero everywhere they
/// cannot influence the loss.
#[test]
fn masked_units_have_exactly_zero_gradients() {
    let mut cfg = bpsk_cfg(2, 4, 3);
    cfg.keep_fraction = 0.5;
    cfg.lambda = 1e-2;
    let params = xavier_init(RngStream::root(71), &cfg).unwrap();
    let (h, y, s) = sample_problem(72, 2, 4);
    let trace = network_forward(&params, &h, &y, &cfg, cfg.layers, false).unwrap();
    let grads = backward(&trace, &s, &params, &cfg).unwrap();
    for (lg, lp) in grads.layers.iter().zip(&params.layers) {
        for j in lp.beta.cutoff_index()..lp.beta.len() {
            assert_eq!(lp.beta.values[j], 0.0);
            for i in 0..lg.w1.cols() {
                assert_eq!(lg.w1[(j, i)], 0.0);
            }
            assert_eq!(lg.b1[j], 0.0);
            for k in 0..lg.w2.rows() {
                assert_eq!(lg.w2[(k, j)], 0.0);
            }
            for k in 0..lg.w3.rows() {
                assert_eq!(lg.w3[(k, j)], 0.0);
            }
        }
    }
}

fn loss_of(params: &NetworkParams, h: &Mat, y: &[f64], s: &[f64], cfg: &NetConfig) -> f64 {
    let trace = network_forward(params, h, y, cfg, cfg.layers, false).unwrap();
    loss_regularized(&trace, s, params, cfg)
}

/// Central finite differences over every parameter of a small learnable-β
/// network, including entries pinned to zero by the keep mask.
#[test]
fn analytic_gradients_match_finite_differences() {
    let mut cfg = bpsk_cfg(2, 4, 3);
    cfg.profile_kind = ProfileKind::Learnable;
    cfg.learnable_beta = true;
    cfg.keep_fraction = 0.75;
    cfg.lambda = 1e-3;
    let mut params = xavier_init(RngStream::root(81), &cfg).unwrap();
    let (h, y, s) = sample_problem(82, 2, 4);

    let trace = network_forward(&params, &h, &y, &cfg, cfg.layers, false).unwrap();
    let grads = backward(&trace, &s, &params, &cfg).unwrap();

    let eps = 1e-5;
    let tol = 1e-4;
    let mut checked = 0usize;
    let check = |analytic: f64, fd: f64, what: &str| {
        let scale = analytic.abs().max(fd.abs()).max(1.0);
        assert!(
            (analytic - fd).abs() / scale < tol,
            "{what}: analytic {analytic:.8e} vs fd {fd:.8e}"
        );
    };
    for q in 0..params.layers.len() {
        macro_rules! check_tensor {
            ($get:ident, $grad:ident, $name:literal, mat) => {
                for idx in 0..params.layers[q].$get.data().len() {
                    let orig = params.layers[q].$get.data()[idx];
                    params.layers[q].$get.data_mut()[idx] = orig + eps;
                    let fp = loss_of(&params, &h, &y, &s, &cfg);
                    params.layers[q].$get.data_mut()[idx] = orig - eps;
                    let fm = loss_of(&params, &h, &y, &s, &cfg);
                    params.layers[q].$get.data_mut()[idx] = orig;
                    check(grads.layers[q].$grad.data()[idx], (fp - fm) / (2.0 * eps), concat!("layer ", $name));
                    checked += 1;
                }
            };
            ($get:ident, $grad:ident, $name:literal, vec) => {
                for idx in 0..params.layers[q].$get.len() {
                    let orig = params.layers[q].$get[idx];
                    params.layers[q].$get[idx] = orig + eps;
                    let fp = loss_of(&params, &h, &y, &s, &cfg);
                    params.layers[q].$get[idx] = orig - eps;
                    let fm = loss_of(&params, &h, &y, &s, &cfg);
                    params.layers[q].$get[idx] = orig;
                    check(grads.layers[q].$grad[idx], (fp - fm) / (2.0 * eps), concat!("layer ", $name));
                    checked += 1;
                }
            };
        }
        check_tensor!(w1, w1, "w1", mat);
        check_tensor!(b1, b1, "b1", vec);
        check_tensor!(w2, w2, "w2", mat);
        check_tensor!(b2, b2, "b2", vec);
        check_tensor!(w3, w3, "w3", mat);
        check_tensor!(b3, b3, "b3", vec);
        for idx in 0..params.layers[q].beta.len() {
            let orig = params.layers[q].beta.values[idx];
            params.layers[q].beta.values[idx] = orig + eps;
            let fp = loss_of(&params, &h, &y, &s, &cfg);
            params.layers[q].beta.values[idx] = orig - eps;
            let fm = loss_of(&params, &h, &y, &s, &cfg);
            params.layers[q].beta.values[idx] = orig;
            check(grads.layers[q].beta[idx], (fp - fm) / (2.0 * eps), "beta");
            checked += 1;
        }
    }
    // 3 layers × (64d² + 11d + 8d) at d = 2
    assert_eq!(checked, 3 * (64 * 4 + 19 * 2));
}
