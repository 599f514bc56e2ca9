//! Classical detector baselines: zero forcing, MMSE, and exhaustive
//! maximum likelihood. The SDR detector lives in [`crate::sdr`].

use crate::env::{hard_slice, Constellation};
use crate::error::{Error, Result};
use crate::mat::{solve_spd, Mat};

/// Guard on the real signal dimension for exhaustive enumeration.
pub const ML_DIM_GUARD: usize = 24;

/// Output of any detector: the soft estimate, its hard slice, and the ML
/// metric value of the hard decision.
#[derive(Debug, Clone)]
pub struct DetectorResult {
    pub soft: Vec<f64>,
    pub hard: Vec<f64>,
    /// ‖y − H·hard‖²
    pub objective: f64,
}

fn result_from_soft(h: &Mat, y: &[f64], soft: Vec<f64>, constellation: Constellation) -> DetectorResult {
    let hard = hard_slice(&soft, constellation);
    let hs = h.matvec(&hard);
    let objective = y.iter().zip(&hs).map(|(a, b)| (a - b) * (a - b)).sum();
    DetectorResult { soft, hard, objective }
}

/// Zero forcing: soft = (HᵀH)⁻¹Hᵀy via SPD factorization.
pub fn zf_detect(h: &Mat, y: &[f64], constellation: Constellation) -> Result<DetectorResult> {
    let soft = zf_soft(h, y)?;
    Ok(result_from_soft(h, y, soft, constellation))
}

/// The least-squares solution alone (also the loss normalizer s̃).
pub fn zf_soft(h: &Mat, y: &[f64]) -> Result<Vec<f64>> {
    if h.rows() < h.cols() {
        return Err(Error::SingularMatrix { dim: h.rows() });
    }
    let gram = h.gram();
    let hty = h.tr_matvec(y);
    solve_spd(&gram, &hty)
}

/// MMSE: soft = (HᵀH + 2σ²I)⁻¹Hᵀy, where σ is the per-real-component noise
/// std (so 2σ² is the per-complex-component variance of the adopted SNR
/// convention).
pub fn mmse_detect(h: &Mat, y: &[f64], sigma: f64, constellation: Constellation) -> Result<DetectorResult> {
    assert!(sigma >= 0.0);
    let mut gram = h.gram();
    let reg = 2.0 * sigma * sigma;
    for i in 0..gram.rows() {
        gram[(i, i)] += reg;
    }
    let hty = h.tr_matvec(y);
    let soft = solve_spd(&gram, &hty)?;
    Ok(result_from_soft(h, y, soft, constellation))
}

/// Exhaustive ML over the full symbol lattice. Deterministic tie-break: the
/// lexicographically first candidate (levels enumerated ascending) wins.
pub fn ml_detect(h: &Mat, y: &[f64], constellation: Constellation) -> Result<DetectorResult> {
    let d = h.cols();
    if d > ML_DIM_GUARD {
        return Err(Error::Capacity(format!(
            "ML enumeration over dimension {d} exceeds the guard of {ML_DIM_GUARD}; use SDR or WeSNet"
        )));
    }
    let levels = constellation.levels();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut candidate = vec![levels[0]; d];
    let total = 1usize << d;
    for idx in 0..total {
        for (j, c) in candidate.iter_mut().enumerate() {
            // most-significant digit first keeps enumeration lexicographic
            *c = levels[(idx >> (d - 1 - j)) & 1];
        }
        let hs = h.matvec(&candidate);
        let obj: f64 = y.iter().zip(&hs).map(|(a, b)| (a - b) * (a - b)).sum();
        match &best {
            Some((b, _)) if obj >= *b => {}
            _ => best = Some((obj, candidate.clone())),
        }
    }
    let (objective, hard) = best.expect("lattice is non-empty");
    Ok(DetectorResult { soft: hard.clone(), hard, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{draw_channel, draw_symbols};
    use crate::rng::RngStream;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    const BPSK: Constellation = Constellation::Bpsk;

    #[test]
    fn zf_identity_channel_recovers_symbols() {
        let h = Mat::identity(3);
        let s = [1.0, -1.0, 1.0];
        let r = zf_detect(&h, &s, BPSK).unwrap();
        for (a, b) in r.soft.iter().zip(s) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r.hard, s.to_vec());
        assert!(r.objective.abs() < 1e-24);
    }

    #[test]
    fn zf_scaling_cancels() {
        let mut h = Mat::identity(2);
        h[(0, 0)] = 2.0;
        h[(1, 1)] = 2.0;
        let r = zf_detect(&h, &[2.0, -2.0], BPSK).unwrap();
        assert!((r.soft[0] - 1.0).abs() < 1e-12);
        assert!((r.soft[1] + 1.0).abs() < 1e-12);
    }

    /// Independent oracle: assemble and solve the normal equations with
    /// Gaussian elimination, no shared code with the Cholesky path.
    fn normal_equations_oracle(h: &Mat, y: &[f64]) -> Vec<f64> {
        let d = h.cols();
        let mut a = vec![vec![0.0; d + 1]; d];
        for j in 0..d {
            for k in 0..d {
                for i in 0..h.rows() {
                    a[j][k] += h[(i, j)] * h[(i, k)];
                }
            }
            for i in 0..h.rows() {
                a[j][d] += h[(i, j)] * y[i];
            }
        }
        for p in 0..d {
            let piv = (p..d).max_by(|&x, &z| a[x][p].abs().total_cmp(&a[z][p].abs())).unwrap();
            a.swap(p, piv);
            for r in 0..d {
                if r != p {
                    let f = a[r][p] / a[p][p];
                    for c in p..=d {
                        a[r][c] -= f * a[p][c];
                    }
                }
            }
        }
        (0..d).map(|i| a[i][d] / a[i][i]).collect()
    }

    #[test]
    fn zf_matches_normal_equations_oracle() {
        let mut rng = RngStream::root(21).rng();
        for _ in 0..50 {
            let ch = draw_channel(&mut rng, 2, 4, BPSK);
            let s = draw_symbols(&mut rng, 2, BPSK);
            let mut y = ch.h_real.matvec(&s);
            for v in &mut y {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += 0.3 * n;
            }
            let got = zf_detect(&ch.h_real, &y, BPSK).unwrap().soft;
            let want = normal_equations_oracle(&ch.h_real, &y);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() / b.abs().max(1.0) < 1e-10);
            }
        }
    }

    #[test]
    fn zf_rank_deficient_reports_dimension() {
        let h = Mat::from_rows(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(zf_detect(&h, &[1.0, 1.0], BPSK), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn mmse_examples() {
        // σ=0 on square invertible H equals ZF
        let h = Mat::from_rows(2, 2, vec![1.0, 0.3, -0.2, 1.5]);
        let y = [0.7, -1.1];
        let zf = zf_detect(&h, &y, BPSK).unwrap();
        let mmse = mmse_detect(&h, &y, 0.0, BPSK).unwrap();
        for (a, b) in zf.soft.iter().zip(&mmse.soft) {
            assert!((a - b).abs() < 1e-12);
        }
        // scalar closed form 1/(1+2σ²) with σ²=1
        let h = Mat::identity(1);
        let r = mmse_detect(&h, &[1.0], 1.0, BPSK).unwrap();
        assert!((r.soft[0] - 1.0 / 3.0).abs() < 1e-15);
        // large σ drives the estimate to 0
        let r = mmse_detect(&h, &[1.0], 1e6, BPSK).unwrap();
        assert!(r.soft[0].abs() < 1e-9);
    }

    #[test]
    fn mmse_to_zf_continuity() {
        let mut rng = RngStream::root(8).rng();
        for _ in 0..20 {
            let ch = draw_channel(&mut rng, 3, 5, BPSK);
            let y: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
            let zf = zf_detect(&ch.h_real, &y, BPSK).unwrap();
            let mm = mmse_detect(&ch.h_real, &y, 1e-6, BPSK).unwrap();
            let dist: f64 = zf.soft.iter().zip(&mm.soft).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert!(dist < 1e-4);
        }
    }

    /// Second, structurally different enumeration: recursive depth-first.
    fn brute_force_oracle(h: &Mat, y: &[f64], constellation: Constellation) -> (f64, Vec<f64>) {
        fn rec(
            h: &Mat,
            y: &[f64],
            levels: &[f64; 2],
            partial: &mut Vec<f64>,
            best: &mut (f64, Vec<f64>),
        ) {
            if partial.len() == h.cols() {
                let hs = h.matvec(partial);
                let obj: f64 = y.iter().zip(&hs).map(|(a, b)| (a - b) * (a - b)).sum();
                if obj < best.0 {
                    *best = (obj, partial.clone());
                }
                return;
            }
            for &l in levels {
                partial.push(l);
                rec(h, y, levels, partial, best);
                partial.pop();
            }
        }
        let mut best = (f64::INFINITY, Vec::new());
        rec(h, y, &constellation.levels(), &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn ml_noiseless_recovers_exactly() {
        let mut rng = RngStream::root(31).rng();
        let ch = draw_channel(&mut rng, 3, 4, BPSK);
        let s = draw_symbols(&mut rng, 3, BPSK);
        let y = ch.h_real.matvec(&s);
        let r = ml_detect(&ch.h_real, &y, BPSK).unwrap();
        assert_eq!(r.hard, s);
        assert!(r.objective < 1e-20);
    }

    #[test]
    fn ml_matches_independent_enumeration() {
        let mut rng = RngStream::root(32).rng();
        for cons in [BPSK, Constellation::Qam4] {
            for _ in 0..40 {
                let nt = 2;
                let ch = draw_channel(&mut rng, nt, 3, cons);
                let d = cons.signal_dim(nt);
                let s = draw_symbols(&mut rng, d, cons);
                let mut y = ch.h_real.matvec(&s);
                for v in &mut y {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    *v += 0.5 * n;
                }
                let r = ml_detect(&ch.h_real, &y, cons).unwrap();
                let (obj, hard) = brute_force_oracle(&ch.h_real, &y, cons);
                assert!((r.objective - obj).abs() < 1e-12);
                assert_eq!(r.hard, hard);
            }
        }
    }

    #[test]
    fn ml_objective_dominates_zf() {
        let mut rng = RngStream::root(33).rng();
        for _ in 0..50 {
            let ch = draw_channel(&mut rng, 3, 5, BPSK);
            let s = draw_symbols(&mut rng, 3, BPSK);
            let mut y = ch.h_real.matvec(&s);
            for v in &mut y {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += rng.gen_range(0.0..1.0) * n;
            }
            let ml = ml_detect(&ch.h_real, &y, BPSK).unwrap();
            let zf = zf_detect(&ch.h_real, &y, BPSK).unwrap();
            assert!(ml.objective <= zf.objective + 1e-12);
        }
    }

    #[test]
    fn ml_guard_rejects_large_dimension() {
        let h = Mat::zeros(50, 25);
        assert!(matches!(ml_detect(&h, &[0.0; 50], BPSK), Err(Error::Capacity(_))));
    }
}
