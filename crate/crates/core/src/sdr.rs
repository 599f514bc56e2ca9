//! Semidefinite relaxation of the ±1 ML detection problem, solved by ADMM
//! with PSD-cone projection and unit-diagonal pinning, then randomized
//! Gaussian rounding.
//!
//! The program is `min tr(LX)` s.t. `diag(X) = 1`, `X ⪰ 0` with
//! `L = [[HᵀH, −Hᵀy],[−yᵀH, ‖y‖²]]`. Symbols with levels ±a are routed
//! through the ±1 relaxation by scaling the channel by `a`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::detectors::DetectorResult;
use crate::eigen::{psd_project, sym_eigen};
use crate::env::Constellation;
use crate::error::Result;
use crate::mat::{norm_sq, Mat};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SdrConfig {
    pub admm_iterations: usize,
    /// ADMM penalty parameter.
    pub rho: f64,
    pub rounding_samples: usize,
    pub eig_tolerance: f64,
}

impl Default for SdrConfig {
    fn default() -> Self {
        Self { admm_iterations: 2000, rho: 1.0, rounding_samples: 100, eig_tolerance: 1e-10 }
    }
}

/// Solver state exposed for diagnostics: the converged PSD iterate and the
/// per-iteration primal residuals ‖X − Z‖_F.
pub struct SdrSolution {
    pub x: Mat,
    pub residuals: Vec<f64>,
}

fn build_l(h: &Mat, y: &[f64]) -> Mat {
    let d = h.cols();
    let n = d + 1;
    let gram = h.gram();
    let hty = h.tr_matvec(y);
    let mut l = Mat::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            l[(i, j)] = gram[(i, j)];
        }
        l[(i, d)] = -hty[i];
        l[(d, i)] = -hty[i];
    }
    l[(d, d)] = norm_sq(y);
    l
}

/// Runs the ADMM splitting: X-update projects onto the PSD cone, Z-update
/// pins the diagonal to 1, scaled dual ascent on U.
pub fn sdr_solve(h: &Mat, y: &[f64], cfg: &SdrConfig) -> Result<SdrSolution> {
    assert!(cfg.admm_iterations >= 1 && cfg.rounding_samples >= 1);
    let l = build_l(h, y);
    let n = l.rows();
    let mut z = Mat::identity(n);
    let mut u = Mat::zeros(n, n);
    let mut x = Mat::zeros(n, n);
    let mut residuals = Vec::with_capacity(cfg.admm_iterations);

    for _ in 0..cfg.admm_iterations {
        // X = Π_PSD(Z − U − L/ρ)
        let mut arg = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                arg[(i, j)] = z[(i, j)] - u[(i, j)] - l[(i, j)] / cfg.rho;
            }
        }
        x = psd_project(&arg, cfg.eig_tolerance)?;

        // Z = X + U with diag pinned to 1
        let mut r = 0.0;
        for i in 0..n {
            for j in 0..n {
                z[(i, j)] = x[(i, j)] + u[(i, j)];
            }
            z[(i, i)] = 1.0;
        }
        // U += X − Z and primal residual ‖X − Z‖_F
        for i in 0..n {
            for j in 0..n {
                let diff = x[(i, j)] - z[(i, j)];
                u[(i, j)] += diff;
                r += diff * diff;
            }
        }
        residuals.push(r.sqrt());
    }
    Ok(SdrSolution { x, residuals })
}

/// Full SDR detector: solve the relaxation and round `rounding_samples`
/// Gaussian draws from the solution factor, keeping the candidate that
/// minimizes ‖y − Hs‖².
pub fn sdr_detect(
    h: &Mat,
    y: &[f64],
    constellation: Constellation,
    cfg: &SdrConfig,
    stream: RngStream,
) -> Result<DetectorResult> {
    let level = constellation.level();
    // scale the channel so symbols become ±1
    let mut hs = h.clone();
    for v in hs.data_mut() {
        *v *= level;
    }
    let sol = sdr_solve(&hs, y, cfg)?;
    let n = sol.x.rows();
    let d = n - 1;

    // factor X = V Λ^{1/2} for sampling
    let eig = sym_eigen(&sol.x, cfg.eig_tolerance)?;
    let mut factor = Mat::zeros(n, n);
    for k in 0..n {
        let root = eig.values[k].max(0.0).sqrt();
        for i in 0..n {
            factor[(i, k)] = eig.vectors[(i, k)] * root;
        }
    }

    let mut rng = stream.rng();
    let mut best_obj = f64::INFINITY;
    let mut best = vec![level; d];
    let mut g = vec![0.0; n];
    for _ in 0..cfg.rounding_samples {
        for gi in g.iter_mut() {
            *gi = StandardNormal.sample(&mut rng);
        }
        let v = factor.matvec(&g);
        let homog = if v[d] >= 0.0 { 1.0 } else { -1.0 };
        let cand: Vec<f64> = (0..d).map(|i| if v[i] * homog >= 0.0 { level } else { -level }).collect();
        let hx = h.matvec(&cand);
        let obj: f64 = y.iter().zip(&hx).map(|(a, b)| (a - b) * (a - b)).sum();
        if obj < best_obj {
            best_obj = obj;
            best = cand;
        }
    }
    Ok(DetectorResult { soft: best.clone(), hard: best, objective: best_obj })
}
