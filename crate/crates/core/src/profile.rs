//! Monotone non-increasing weight-profile coefficients and the machinery
//! around them: analytic generators, hard keep-masks, exact-zero elementwise
//! scaling, and the monotone projection used for learnable coefficients.
//!
//! All profile formulas are 1-indexed: the linear profile is `β_i = 1 − i/N`
//! and reaches exactly 0 at `i = N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Linear,
    HalfExponential,
    Learnable,
}

/// Monotone non-increasing coefficient vector in [0,1] with an optional hard
/// keep-mask applied through [`effective_profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub values: Vec<f64>,
    pub kind: ProfileKind,
    pub keep_fraction: f64,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Constant-one profile (the identity scaling).
    pub fn ones(n: usize) -> Self {
        Profile { values: vec![1.0; n], kind: ProfileKind::Linear, keep_fraction: 1.0 }
    }

    pub fn is_monotone_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    /// 1-indexed cutoff of the keep-mask: entries with index > cutoff are 0.
    pub fn cutoff_index(&self) -> usize {
        keep_cutoff(self.len(), self.keep_fraction)
    }

    /// Number of exactly-zero trailing coefficients.
    pub fn zero_count(&self) -> usize {
        self.values.iter().filter(|v| **v == 0.0).count()
    }
}

/// Hard keep-mask: 1-indexed positions `1..=cutoff_index` survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeepMask {
    pub cutoff_index: usize,
    pub n: usize,
}

fn keep_cutoff(n: usize, keep_fraction: f64) -> usize {
    assert!(keep_fraction > 0.0 && keep_fraction <= 1.0, "keep_fraction must be in (0,1]");
    ((keep_fraction * n as f64).ceil() as usize).clamp(1, n)
}

/// Linear profile: `β_i = 1 − i/N`, i = 1..N.
pub fn linear_profile(n: usize) -> Profile {
    assert!(n >= 1);
    let values = (1..=n).map(|i| 1.0 - i as f64 / n as f64).collect();
    Profile { values, kind: ProfileKind::Linear, keep_fraction: 1.0 }
}

/// Half-exponential profile: unit plateau for `i ≤ N/2`, then
/// `β_i = exp(N/2 − i − 1)`. Requires even `N`.
pub fn half_exp_profile(n: usize) -> Result<Profile> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Config(format!("half-exponential profile requires even N ≥ 2, got {n}")));
    }
    let half = n / 2;
    let values = (1..=n)
        .map(|i| if i <= half { 1.0 } else { ((half as f64) - i as f64 - 1.0).exp() })
        .collect();
    Ok(Profile { values, kind: ProfileKind::HalfExponential, keep_fraction: 1.0 })
}

/// Applies the keep-mask: coefficients past `ceil(keep_fraction·N)` become
/// exactly 0.
pub fn effective_profile(p: &Profile, keep_fraction: f64) -> Profile {
    let cutoff = keep_cutoff(p.len(), keep_fraction);
    let values = p
        .values
        .iter()
        .enumerate()
        .map(|(idx, &v)| if idx + 1 > cutoff { 0.0 } else { v })
        .collect();
    Profile { values, kind: p.kind, keep_fraction }
}

/// Elementwise `β ⊙ u` with exact-zero semantics: positions where β is 0
/// produce exactly `0.0` without touching `u`, so a sparse path that skips
/// them is bit-identical to this dense one.
pub fn apply_profile(u: &[f64], p: &Profile) -> Result<Vec<f64>> {
    if u.len() != p.len() {
        return Err(Error::Contract(format!("profile length {} vs input length {}", p.len(), u.len())));
    }
    Ok(u.iter().zip(&p.values).map(|(&ui, &b)| if b == 0.0 { 0.0 } else { b * ui }).collect())
}

/// Euclidean projection onto monotone non-increasing sequences in [0,1]:
/// pool-adjacent-violators on the reversed order, then clamp. Idempotent.
pub fn project_monotone_unit(values: &[f64]) -> Vec<f64> {
    assert!(values.iter().all(|v| v.is_finite()), "projection requires finite entries");
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    // PAV for a non-increasing fit: blocks carry (sum, count); a new value
    // that exceeds the running block mean merges backward.
    let mut sums: Vec<f64> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for &v in values {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let k = sums.len();
            let mean_last = sums[k - 1] / counts[k - 1] as f64;
            let mean_prev = sums[k - 2] / counts[k - 2] as f64;
            if mean_prev >= mean_last {
                break;
            }
            let (s, c) = (sums.pop().unwrap(), counts.pop().unwrap());
            sums[k - 2] += s;
            counts[k - 2] += c;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (s, c) in sums.iter().zip(&counts) {
        let mean = (s / *c as f64).clamp(0.0, 1.0);
        out.extend(std::iter::repeat(mean).take(*c));
    }
    out
}
