//! Monte-Carlo BER sweeps with counter-based per-trial RNG streams. Each
//! trial derives its randomness from (master seed, detector index, SNR index,
//! trial index), and aggregation sums integer error counts, so results are
//! byte-identical no matter how trials are scheduled across threads.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use wesnet_core::env::{draw_channel, draw_symbols};
use wesnet_core::{
    detect, ml_detect, mmse_detect, noise_std_from_snr, sdr_detect, zf_detect, Constellation,
    NetConfig, NetworkParams, RngStream, SdrConfig,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_count: u64,
    pub error_count: u64,
    pub ber: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub detector: String,
    pub points: Vec<BerPoint>,
}

/// One detector participating in a sweep.
pub enum SweepDetector<'a> {
    Zf,
    Mmse,
    Ml,
    Sdr(SdrConfig),
    /// A trained network evaluated at `layers` depth.
    Learned { params: &'a NetworkParams, net: &'a NetConfig, layers: usize, name: String },
}

impl SweepDetector<'_> {
    pub fn name(&self) -> String {
        match self {
            SweepDetector::Zf => "zf".into(),
            SweepDetector::Mmse => "mmse".into(),
            SweepDetector::Ml => "ml".into(),
            SweepDetector::Sdr(_) => "sdr".into(),
            SweepDetector::Learned { name, .. } => name.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub nt: usize,
    pub nr: usize,
    pub constellation: Constellation,
    pub snr_grid: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub threads: usize,
}

/// 95% confidence half-width from the binomial normal approximation.
pub fn ci95_halfwidth(errors: u64, bits: u64) -> f64 {
    let n = bits as f64;
    let p = errors as f64 / n;
    1.96 * (p * (1.0 - p) / n).sqrt()
}

fn run_trial(
    stream: RngStream,
    det: &SweepDetector<'_>,
    s: &SweepSettings,
    snr_db: f64,
) -> wesnet_core::Result<(u64, u64)> {
    let mut rng = stream.child(0).rng();
    let d = s.constellation.signal_dim(s.nt);
    let ch = draw_channel(&mut rng, s.nt, s.nr, s.constellation);
    let sym = draw_symbols(&mut rng, d, s.constellation);
    let sigma = noise_std_from_snr(snr_db, s.nt, 1.0);
    let mut y = ch.h_real.matvec(&sym);
    for v in &mut y {
        let n: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * n;
    }
    let hard = match det {
        SweepDetector::Zf => zf_detect(&ch.h_real, &y, s.constellation)?.hard,
        SweepDetector::Mmse => mmse_detect(&ch.h_real, &y, sigma, s.constellation)?.hard,
        SweepDetector::Ml => ml_detect(&ch.h_real, &y, s.constellation)?.hard,
        SweepDetector::Sdr(cfg) => sdr_detect(&ch.h_real, &y, s.constellation, cfg, stream.child(1))?.hard,
        SweepDetector::Learned { params, net, layers, .. } => {
            detect(params, &ch.h_real, &y, net, *layers)?.hard
        }
    };
    let errors = sym.iter().zip(&hard).filter(|(a, b)| a != b).count() as u64;
    Ok((errors, d as u64))
}

/// Runs every detector over the grid. Deterministic in `master_seed` and
/// independent of `threads` (each trial owns its RNG stream; aggregation is
/// an order-independent integer sum).
pub fn run_ber_sweep(dets: &[SweepDetector<'_>], s: &SweepSettings) -> Result<Vec<BerCurve>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let root = RngStream::root(s.master_seed);

    let mut curves = Vec::with_capacity(dets.len());
    for (di, det) in dets.iter().enumerate() {
        let mut points = Vec::with_capacity(s.snr_grid.len());
        for (si, &snr_db) in s.snr_grid.iter().enumerate() {
            let (errors, bits) = pool.install(|| {
                (0..s.trials)
                    .into_par_iter()
                    .map(|trial| {
                        let stream = root.child_path(&[di as u64, si as u64, trial]);
                        run_trial(stream, det, s, snr_db)
                    })
                    .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
            })?;
            points.push(BerPoint {
                snr_db,
                trials: s.trials,
                bit_count: bits,
                error_count: errors,
                ber: errors as f64 / bits as f64,
                ci95: ci95_halfwidth(errors, bits),
            });
        }
        curves.push(BerCurve { detector: det.name(), points });
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(trials: u64, threads: usize, snr: f64) -> SweepSettings {
        SweepSettings {
            nt: 2,
            nr: 4,
            constellation: Constellation::Bpsk,
            snr_grid: vec![snr],
            trials,
            master_seed: 9,
            threads,
        }
    }

    #[test]
    fn noiseless_point_is_error_free_for_zf_and_ml() {
        let s = settings(500, 2, f64::INFINITY);
        let curves = run_ber_sweep(&[SweepDetector::Zf, SweepDetector::Ml], &s).unwrap();
        for c in &curves {
            assert_eq!(c.points[0].error_count, 0, "{}", c.detector);
        }
    }

    #[test]
    fn identical_results_across_thread_counts() {
        let mut reference = None;
        for threads in [1usize, 2, 8] {
            let s = settings(2000, threads, 6.0);
            let curves = run_ber_sweep(&[SweepDetector::Zf, SweepDetector::Mmse], &s).unwrap();
            match &reference {
                None => reference = Some(curves),
                Some(r) => assert_eq!(r, &curves, "threads={threads}"),
            }
        }
        let r = reference.unwrap();
        assert!(r[0].points[0].error_count > 0, "need a non-degenerate point");
    }

    #[test]
    fn ci_covers_known_bernoulli_rate() {
        // synthetic stream with known p: the reported interval must cover p
        // in at least 93% of 1000 repetitions
        let p = 0.05;
        let n = 2000u64;
        let mut covered = 0;
        for rep in 0..1000u64 {
            let mut rng = RngStream::root(123).child(rep).rng();
            let mut errors = 0u64;
            for _ in 0..n {
                let u: f64 = rand::Rng::gen(&mut rng);
                if u < p {
                    errors += 1;
                }
            }
            let hat = errors as f64 / n as f64;
            let ci = ci95_halfwidth(errors, n);
            if (hat - p).abs() <= ci {
                covered += 1;
            }
        }
        assert!(covered >= 930, "coverage {covered}/1000");
    }
}
