//! Shared fixtures for the criterion benchmarks.

use wesnet_core::net::{xavier_init, NetConfig, NetworkParams};
use wesnet_core::env::{draw_channel, draw_symbols};
use wesnet_core::{noise_std_from_snr, ChannelRealization, Constellation, RngStream};

/// One ready-to-detect problem instance at the given SNR.
pub struct Instance {
    pub channel: ChannelRealization,
    pub symbols: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn make_instance(seed: u64, nt: usize, nr: usize, snr_db: f64) -> Instance {
    let cons = Constellation::Bpsk;
    let mut rng = RngStream::root(seed).rng();
    let channel = draw_channel(&mut rng, nt, nr, cons);
    let d = cons.signal_dim(nt);
    let symbols = draw_symbols(&mut rng, d, cons);
    let sigma = noise_std_from_snr(snr_db, nt, 1.0);
    let mut y = channel.h_real.matvec(&symbols);
    use rand::Rng;
    for v in &mut y {
        // Box-Muller-free: sample via rand_distr through the stream RNG
        let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        *v += sigma * (-2.0 * u1.ln()).sqrt() * u2.cos();
    }
    Instance { channel, symbols, y }
}

pub fn make_net(nt: usize, nr: usize, keep: f64) -> (NetConfig, NetworkParams) {
    let mut cfg = NetConfig::new(nt, nr, Constellation::Bpsk);
    cfg.keep_fraction = keep;
    let params = xavier_init(RngStream::root(1).child(0), &cfg).expect("init");
    (cfg, params)
}
