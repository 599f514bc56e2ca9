//! Transmission environment: constellations, Rayleigh channels in the
//! real-valued representation, batched sample generation, and BER scoring.
//!
//! SNR convention: SNR = E‖Hs‖² / E‖n‖² with unit-variance complex channel
//! entries and unit-energy symbols, so the total complex noise variance is
//! σ²_c = Nt·Es·10^(−SNR/10) and each real component carries σ² = σ²_c / 2.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::RngStream;

/// Symbol constellation; average symbol energy is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    /// Real ±1 symbols; the real signal dimension stays `Nt`.
    Bpsk,
    /// 4-QAM with ±1/√2 per real dimension; real signal dimension `2·Nt`.
    Qam4,
}

impl Constellation {
    /// Per-real-dimension amplitude levels, sorted ascending and symmetric.
    pub fn levels(self) -> [f64; 2] {
        match self {
            Constellation::Bpsk => [-1.0, 1.0],
            Constellation::Qam4 => [-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        }
    }

    /// The positive amplitude level.
    pub fn level(self) -> f64 {
        self.levels()[1]
    }

    /// Bits carried per real signal dimension (one for both constellations).
    pub fn bits_per_real_dim(self) -> usize {
        1
    }

    /// Real signal dimension for `nt` transmit antennas.
    pub fn signal_dim(self, nt: usize) -> usize {
        match self {
            Constellation::Bpsk => nt,
            Constellation::Qam4 => 2 * nt,
        }
    }
}

/// A complex channel and its real-valued block decomposition.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_re: Mat,
    pub h_im: Mat,
    /// Real block form: `[[Re,−Im],[Im,Re]]` for QAM4, `[Re;Im]` for BPSK.
    pub h_real: Mat,
    pub nt: usize,
    pub nr: usize,
}

/// A batch of transmissions; one fresh channel per sample unless the caller
/// pins a fixed channel.
#[derive(Debug, Clone)]
pub struct TransmissionBatch {
    /// Transmitted symbols, B×d.
    pub s: Mat,
    /// Received vectors, B×2Nr.
    pub y: Mat,
    /// Per-sample channels (length B, or 1 in fixed-channel mode).
    pub channels: Vec<ChannelRealization>,
    pub snr_db: Vec<f64>,
    /// Per-real-component noise std, per sample.
    pub sigma: Vec<f64>,
    pub constellation: Constellation,
}

impl TransmissionBatch {
    pub fn len(&self) -> usize {
        self.s.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Channel for sample `i` (handles fixed-channel batches).
    pub fn channel(&self, i: usize) -> &ChannelRealization {
        if self.channels.len() == 1 { &self.channels[0] } else { &self.channels[i] }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatchConfig {
    pub nt: usize,
    pub nr: usize,
    pub constellation: Constellation,
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    pub batch: usize,
    /// When true every sample reuses the first drawn channel.
    pub fixed_channel: bool,
}

/// Builds the real-valued decomposition of a complex channel.
///
/// QAM4 doubles both dimensions into the `[[Re,−Im],[Im,Re]]` block form;
/// BPSK keeps signal dimension `Nt` and stacks `[Re;Im]`.
pub fn realify_channel(h_re: &Mat, h_im: &Mat, constellation: Constellation) -> Result<ChannelRealization> {
    let (nr, nt) = (h_re.rows(), h_re.cols());
    if nr == 0 || nt == 0 {
        return Err(Error::InputDomain("channel must have Nr ≥ 1 and Nt ≥ 1".into()));
    }
    if h_im.rows() != nr || h_im.cols() != nt {
        return Err(Error::Contract("Re/Im channel parts have mismatched shapes".into()));
    }
    if !h_re.is_finite() || !h_im.is_finite() {
        return Err(Error::InputDomain("channel contains a non-finite entry".into()));
    }
    let h_real = match constellation {
        Constellation::Qam4 => {
            let mut m = Mat::zeros(2 * nr, 2 * nt);
            for i in 0..nr {
                for j in 0..nt {
                    m[(i, j)] = h_re[(i, j)];
                    m[(i, nt + j)] = -h_im[(i, j)];
                    m[(nr + i, j)] = h_im[(i, j)];
                    m[(nr + i, nt + j)] = h_re[(i, j)];
                }
            }
            m
        }
        Constellation::Bpsk => {
            let mut m = Mat::zeros(2 * nr, nt);
            for i in 0..nr {
                for j in 0..nt {
                    m[(i, j)] = h_re[(i, j)];
                    m[(nr + i, j)] = h_im[(i, j)];
                }
            }
            m
        }
    };
    Ok(ChannelRealization { h_re: h_re.clone(), h_im: h_im.clone(), h_real, nt, nr })
}

/// Per-real-component noise std for the adopted SNR convention:
/// σ² = Nt·Es·10^(−snr/10) / 2.
pub fn noise_std_from_snr(snr_db: f64, nt: usize, es: f64) -> f64 {
    assert!(snr_db.is_finite() || snr_db == f64::INFINITY, "snr must be finite or +inf");
    assert!(nt >= 1 && es > 0.0);
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let var = nt as f64 * es * 10f64.powf(-snr_db / 10.0) / 2.0;
    var.sqrt()
}

/// Draws one i.i.d. CN(0,1) channel (unit variance per complex entry).
pub fn draw_channel(rng: &mut impl Rng, nt: usize, nr: usize, constellation: Constellation) -> ChannelRealization {
    let normal = StandardNormal;
    let scale = std::f64::consts::FRAC_1_SQRT_2; // per-component variance 1/2
    let mut re = Mat::zeros(nr, nt);
    let mut im = Mat::zeros(nr, nt);
    for i in 0..nr {
        for j in 0..nt {
            let a: f64 = normal.sample(rng);
            let b: f64 = normal.sample(rng);
            re[(i, j)] = a * scale;
            im[(i, j)] = b * scale;
        }
    }
    realify_channel(&re, &im, constellation).expect("drawn channel is finite")
}

/// Draws one symbol vector with entries uniform over the constellation levels.
pub fn draw_symbols(rng: &mut impl Rng, d: usize, constellation: Constellation) -> Vec<f64> {
    let levels = constellation.levels();
    (0..d).map(|_| levels[rng.gen_range(0..2)]).collect()
}

/// Generates a batch of transmissions: fresh channel per sample, per-sample
/// SNR uniform on `[snr_lo, snr_hi]`, `y = Hs + n` exactly.
pub fn generate_batch(stream: RngStream, cfg: &BatchConfig) -> Result<TransmissionBatch> {
    if cfg.batch == 0 {
        return Err(Error::Contract("batch must be ≥ 1".into()));
    }
    if cfg.snr_lo_db > cfg.snr_hi_db {
        return Err(Error::Contract("snr_lo must be ≤ snr_hi".into()));
    }
    let d = cfg.constellation.signal_dim(cfg.nt);
    let m = 2 * cfg.nr;
    let mut s = Mat::zeros(cfg.batch, d);
    let mut y = Mat::zeros(cfg.batch, m);
    let mut channels = Vec::with_capacity(if cfg.fixed_channel { 1 } else { cfg.batch });
    let mut snrs = Vec::with_capacity(cfg.batch);
    let mut sigmas = Vec::with_capacity(cfg.batch);
    let mut rng = stream.rng();
    let normal = StandardNormal;

    for b in 0..cfg.batch {
        if channels.is_empty() || !cfg.fixed_channel {
            channels.push(draw_channel(&mut rng, cfg.nt, cfg.nr, cfg.constellation));
        }
        let ch = channels.last().unwrap();
        let sym = draw_symbols(&mut rng, d, cfg.constellation);
        let snr = if cfg.snr_lo_db == cfg.snr_hi_db {
            cfg.snr_lo_db
        } else {
            rng.gen_range(cfg.snr_lo_db..=cfg.snr_hi_db)
        };
        let sigma = noise_std_from_snr(snr, cfg.nt, 1.0);
        let hs = ch.h_real.matvec(&sym);
        for (i, &hsi) in hs.iter().enumerate() {
            let n: f64 = normal.sample(&mut rng);
            y[(b, i)] = hsi + sigma * n;
        }
        s.data_mut()[b * d..(b + 1) * d].copy_from_slice(&sym);
        snrs.push(snr);
        sigmas.push(sigma);
    }
    Ok(TransmissionBatch { s, y, channels, snr_db: snrs, sigma: sigmas, constellation: cfg.constellation })
}

/// Maps each component to the nearest constellation level. Ties break toward
/// the positive level.
pub fn hard_slice(x: &[f64], constellation: Constellation) -> Vec<f64> {
    let [neg, pos] = constellation.levels();
    x.iter().map(|&v| if v >= 0.0 { pos } else { neg }).collect()
}

/// Fraction of erroneous bits (one bit per real component here).
pub fn bit_error_rate(s_true: &Mat, s_est: &Mat, _constellation: Constellation) -> Result<f64> {
    if s_true.rows() != s_est.rows() || s_true.cols() != s_est.cols() {
        return Err(Error::Contract(format!(
            "shape mismatch: {}×{} vs {}×{}",
            s_true.rows(),
            s_true.cols(),
            s_est.rows(),
            s_est.cols()
        )));
    }
    let total = s_true.data().len();
    let errors = s_true.data().iter().zip(s_est.data()).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> (Mat, Mat) {
        (Mat::from_rows(1, 1, vec![re]), Mat::from_rows(1, 1, vec![im]))
    }

    #[test]
    fn realify_qam4_block_form() {
        // h = a + jb → [[a,−b],[b,a]]
        let (re, im) = c(0.3, -1.7);
        let ch = realify_channel(&re, &im, Constellation::Qam4).unwrap();
        assert_eq!(ch.h_real.data(), &[0.3, 1.7, -1.7, 0.3]);
    }

    #[test]
    fn realify_bpsk_stacks_re_over_im() {
        let (re, im) = c(1.0, 0.0);
        let ch = realify_channel(&re, &im, Constellation::Bpsk).unwrap();
        assert_eq!(ch.h_real.data(), &[1.0, 0.0]);

        // Nr=2, Nt=1, h = [j, 1]ᵀ → [0;1;1;0]
        let re = Mat::from_rows(2, 1, vec![0.0, 1.0]);
        let im = Mat::from_rows(2, 1, vec![1.0, 0.0]);
        let ch = realify_channel(&re, &im, Constellation::Bpsk).unwrap();
        assert_eq!(ch.h_real.data(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn realify_rejects_non_finite() {
        let (re, im) = c(f64::NAN, 0.0);
        assert!(matches!(realify_channel(&re, &im, Constellation::Bpsk), Err(Error::InputDomain(_))));
    }

    #[test]
    fn qam4_round_trip_reproduces_complex_channel() {
        let mut rng = RngStream::root(11).rng();
        let ch = draw_channel(&mut rng, 3, 4, Constellation::Qam4);
        let (nr, nt) = (ch.nr, ch.nt);
        for i in 0..nr {
            for j in 0..nt {
                assert_eq!(ch.h_real[(i, j)], ch.h_re[(i, j)]);
                assert_eq!(ch.h_real[(i, nt + j)], -ch.h_im[(i, j)]);
                assert_eq!(ch.h_real[(nr + i, j)], ch.h_im[(i, j)]);
                assert_eq!(ch.h_real[(nr + i, nt + j)], ch.h_re[(i, j)]);
            }
        }
    }

    #[test]
    fn noise_std_examples() {
        // snr=10 dB, Nt=4, Es=1 → σ² = 0.2
        let sigma = noise_std_from_snr(10.0, 4, 1.0);
        assert!((sigma * sigma - 0.2).abs() < 1e-15);
        assert!((sigma - 0.44721).abs() < 1e-4);
        // snr=0 dB, Nt=1 → σ² = 0.5
        let sigma = noise_std_from_snr(0.0, 1, 1.0);
        assert!((sigma * sigma - 0.5).abs() < 1e-15);
        // noiseless limit
        assert_eq!(noise_std_from_snr(f64::INFINITY, 1, 1.0), 0.0);
    }

    #[test]
    fn noiseless_batch_satisfies_y_eq_hs() {
        let cfg = BatchConfig {
            nt: 2,
            nr: 3,
            constellation: Constellation::Qam4,
            snr_lo_db: f64::INFINITY,
            snr_hi_db: f64::INFINITY,
            batch: 4,
            fixed_channel: false,
        };
        let b = generate_batch(RngStream::root(5), &cfg).unwrap();
        for i in 0..b.len() {
            let hs = b.channel(i).h_real.matvec(b.s.row(i));
            assert_eq!(hs.as_slice(), b.y.row(i));
        }
    }

    #[test]
    fn fixed_seed_batches_are_bit_identical() {
        let cfg = BatchConfig {
            nt: 3,
            nr: 3,
            constellation: Constellation::Bpsk,
            snr_lo_db: 8.0,
            snr_hi_db: 14.0,
            batch: 16,
            fixed_channel: false,
        };
        let a = generate_batch(RngStream::root(99), &cfg).unwrap();
        let b = generate_batch(RngStream::root(99), &cfg).unwrap();
        assert_eq!(a.s.data(), b.s.data());
        assert_eq!(a.y.data(), b.y.data());
        assert_eq!(a.sigma, b.sigma);
    }

    #[test]
    fn hard_slice_examples() {
        assert_eq!(hard_slice(&[0.3, -0.9], Constellation::Bpsk), vec![1.0, -1.0]);
        // documented tie-break toward the positive level
        assert_eq!(hard_slice(&[0.0, 0.0], Constellation::Bpsk), vec![1.0, 1.0]);
        let l = Constellation::Qam4.level();
        assert_eq!(hard_slice(&[0.5, -0.1], Constellation::Qam4), vec![l, -l]);
    }

    #[test]
    fn ber_examples() {
        let s = Mat::from_rows(1, 4, vec![1.0, -1.0, 1.0, 1.0]);
        assert_eq!(bit_error_rate(&s, &s, Constellation::Bpsk).unwrap(), 0.0);
        let flipped = Mat::from_rows(1, 4, vec![-1.0, 1.0, -1.0, -1.0]);
        assert_eq!(bit_error_rate(&s, &flipped, Constellation::Bpsk).unwrap(), 1.0);
        let one = Mat::from_rows(1, 4, vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(bit_error_rate(&s, &one, Constellation::Bpsk).unwrap(), 0.25);
        let bad = Mat::zeros(2, 2);
        assert!(bit_error_rate(&s, &bad, Constellation::Bpsk).is_err());
    }

    #[test]
    fn symbol_energy_near_unity() {
        // empirical mean of ‖s‖²/d over ≥1e5 samples within 1% of 1
        for cons in [Constellation::Bpsk, Constellation::Qam4] {
            let mut rng = RngStream::root(3).child(cons as u64).rng();
            let d = 8;
            let n = 100_000 / d;
            let mut acc = 0.0;
            for _ in 0..n {
                let s = draw_symbols(&mut rng, d, cons);
                acc += crate::mat::norm_sq(&s) / d as f64;
            }
            let mean = acc / n as f64;
            // per-real-dimension energy is level² (complex symbols are unit
            // energy: two real components of level² = 1/2 each for QAM4)
            let expected = cons.level() * cons.level();
            assert!((mean - expected).abs() < 0.01, "energy {mean} for {cons:?}");
        }
    }

    #[test]
    fn empirical_snr_matches_convention() {
        // E‖Hs‖²/E‖n‖² within 3% of 10^(snr/10) over ≥1e5 samples.
        let snr_db = 6.0;
        let cfg = BatchConfig {
            nt: 2,
            nr: 4,
            constellation: Constellation::Qam4,
            snr_lo_db: snr_db,
            snr_hi_db: snr_db,
            batch: 100_000,
            fixed_channel: false,
        };
        let b = generate_batch(RngStream::root(17), &cfg).unwrap();
        let mut sig = 0.0;
        let mut noise = 0.0;
        for i in 0..b.len() {
            let hs = b.channel(i).h_real.matvec(b.s.row(i));
            sig += crate::mat::norm_sq(&hs);
            let diff: Vec<f64> = b.y.row(i).iter().zip(&hs).map(|(y, h)| y - h).collect();
            noise += crate::mat::norm_sq(&diff);
        }
        let measured = sig / noise;
        let expected = 10f64.powf(snr_db / 10.0);
        assert!((measured / expected - 1.0).abs() < 0.03, "measured {measured}, expected {expected}");
    }
}
