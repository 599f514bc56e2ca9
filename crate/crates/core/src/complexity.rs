//! Analytic FLOP accounting for every detector in the workbench, plus the
//! instrumented multiply-accumulate counter that cross-checks the formulas.
//!
//! Formula coefficients like 56/3 are kept as exact rationals over `i128`
//! and rounded to an integer only at the final result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational over i128, normalized with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i128;
        let sign = if den < 0 { -1 } else { 1 };
        Self { num: sign * num / g, den: sign * den / g }
    }

    pub fn int(v: i128) -> Self {
        Self { num: v, den: 1 }
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::new(self.num * o.num, self.den * o.den)
    }

    /// Rounds to the nearest integer (ties away from zero).
    pub fn round(self) -> i128 {
        let q = self.num / self.den;
        let r = self.num % self.den;
        if 2 * r.abs() >= self.den {
            q + self.num.signum()
        } else {
            q
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b.max(1);
    }
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Standard dense-algebra expressions with closed-form FLOP counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopExpr {
    VecScale,
    MatScale,
    MatVec,
    MatMat,
    MatDiag,
    Inner,
    Outer,
    Gram,
    EuclidNorm,
    SpdInverse,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Dims {
    pub m: Option<u64>,
    pub n: Option<u64>,
    pub l: Option<u64>,
}

impl Dims {
    pub fn mn(m: u64, n: u64) -> Self {
        Self { m: Some(m), n: Some(n), l: None }
    }

    pub fn n(n: u64) -> Self {
        Self { m: None, n: Some(n), l: None }
    }

    fn need(&self, field: &str) -> Result<i128> {
        let v = match field {
            "M" => self.m,
            "N" => self.n,
            "L" => self.l,
            _ => unreachable!(),
        };
        v.map(|x| x as i128).ok_or_else(|| Error::Contract(format!("missing required dimension {field}")))
    }
}

/// Exact FLOP count of a standard expression.
pub fn table1_flops(expr: FlopExpr, dims: Dims) -> Result<u64> {
    let count = match expr {
        FlopExpr::VecScale => dims.need("N")?,
        FlopExpr::MatScale | FlopExpr::Outer => dims.need("M")? * dims.need("N")?,
        FlopExpr::MatVec => {
            let (m, n) = (dims.need("M")?, dims.need("N")?);
            2 * m * n - m
        }
        FlopExpr::MatMat => {
            let (m, n, l) = (dims.need("M")?, dims.need("N")?, dims.need("L")?);
            2 * m * n * l - m * l
        }
        FlopExpr::MatDiag => dims.need("M")? * dims.need("N")?,
        FlopExpr::Inner => 2 * dims.need("N")? - 1,
        FlopExpr::Gram => {
            let (m, n) = (dims.need("M")?, dims.need("N")?);
            // MN² + N(M − N/2) − N/2, exact: multiplications MN(N+1)/2 plus
            // summations N(M−1)(N+1)/2
            let mults = Rational::new(m * n * (n + 1), 2);
            let adds = Rational::new(n * (m - 1) * (n + 1), 2);
            mults.add(adds).round()
        }
        FlopExpr::EuclidNorm => 2 * dims.need("M")? * dims.need("N")? - 1,
        FlopExpr::SpdInverse => {
            let n = dims.need("N")?;
            n * n * n + n * n + n
        }
    };
    Ok(count as u64)
}

fn into_u64_count(count: i128, what: &str) -> Result<u64> {
    u64::try_from(count)
        .map_err(|_| Error::Capacity(format!("{what} FLOP count {count} does not fit in 64 bits")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Zf,
    Mmse,
    Ml,
    Sdr,
    WeSNet,
    DetNet,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Zf => "zf",
            DetectorKind::Mmse => "mmse",
            DetectorKind::Ml => "ml",
            DetectorKind::Sdr => "sdr",
            DetectorKind::WeSNet => "wesnet",
            DetectorKind::DetNet => "detnet",
        }
    }
}

/// Per-detector formula inputs beyond `nt`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlopExtras {
    pub constellation_size: Option<u64>,
    pub n_iterations: Option<u64>,
    pub keep_fraction: Option<f64>,
    pub layers: Option<u64>,
}

/// Exact per-symbol FLOP count of each detector.
pub fn detector_flops(detector: DetectorKind, nt: u64, extras: &FlopExtras) -> Result<u64> {
    let n = Rational::int(nt as i128);
    let n2 = n.mul(n);
    let n3 = n2.mul(n);
    let count = match detector {
        DetectorKind::Zf => Rational::new(56, 3)
            .mul(n3)
            .add(Rational::int(38).mul(n2))
            .add(Rational::new(28, 3).mul(n))
            .round(),
        DetectorKind::Mmse => Rational::new(56, 3)
            .mul(n3)
            .add(Rational::int(40).mul(n2))
            .add(Rational::new(34, 3).mul(n))
            .add(Rational::int(1))
            .round(),
        DetectorKind::Ml => {
            let s = extras
                .constellation_size
                .ok_or_else(|| Error::Contract("ML flops require extras.constellation_size".into()))?;
            let per = 8 * (nt as i128) * (nt as i128) + 8 * nt as i128 - 2;
            (s as i128).pow(nt as u32) * per
        }
        DetectorKind::Sdr => {
            let iters = extras
                .n_iterations
                .ok_or_else(|| Error::Contract("SDR flops require extras.n_iterations".into()))?;
            let per = Rational::int(13)
                .mul(n3)
                .add(Rational::int(25).mul(n2))
                .add(Rational::int(17).mul(n))
                .add(Rational::int(4));
            per.mul(Rational::int(iters as i128)).round()
        }
        DetectorKind::WeSNet => {
            let beta = extras
                .keep_fraction
                .ok_or_else(|| Error::Contract("WeSNet flops require extras.keep_fraction".into()))?;
            let layers = extras.layers.ok_or_else(|| Error::Contract("WeSNet flops require extras.layers".into()))?;
            // [β̃ Nt(128Nt+5) + 9Nt]·L, rounded only at the end
            let core = beta * nt as f64 * (128.0 * nt as f64 + 5.0) + 9.0 * nt as f64;
            (core * layers as f64).round() as i128
        }
        DetectorKind::DetNet => {
            let layers = extras.layers.ok_or_else(|| Error::Contract("DetNet flops require extras.layers".into()))?;
            (nt as i128) * (128 * nt as i128 - 2) * layers as i128
        }
    };
    into_u64_count(count, detector.name())
}

/// Feed-forward cost of an MLP over the given layer sizes: matrix-multiply
/// terms per layer plus one activation per neuron per layer.
pub fn mlp_forward_flops(layer_sizes: &[u64]) -> u64 {
    assert!(layer_sizes.len() >= 2, "need at least input and output sizes");
    let mut matmul = 0u64;
    let mut activations = 0u64;
    for w in layer_sizes.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        matmul += 2 * cur * prev - cur;
        activations += cur;
    }
    matmul + activations
}

/// Trainable parameter count: per layer 64d² + 11d, plus 8d per layer for
/// learnable profile coefficients.
pub fn wesnet_param_count(d: u64, layers: u64, learnable_beta: bool) -> u64 {
    let per_layer = 64 * d * d + 11 * d + if learnable_beta { 8 * d } else { 0 };
    per_layer * layers
}

/// Instrumented multiply-accumulate counter owned by one forward invocation.
///
/// `hidden_gated` covers everything attributable to individual hidden units
/// (the part the profile mask can skip); `overhead` covers the rest (Hᵀy,
/// HᵀH, biases, activations). Adds and multiplies each count as one
/// operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MacCounter {
    pub hidden_gated: u64,
    pub overhead: u64,
}

impl MacCounter {
    pub fn total(&self) -> u64 {
        self.hidden_gated + self.overhead
    }
}

/// Analytic-vs-measured complexity entry for one detector configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub detector: String,
    pub nt: u64,
    pub layers: Option<u64>,
    pub keep_fraction: Option<f64>,
    pub analytic_flops: u64,
    pub measured_macs: Option<u64>,
    pub parameters: Option<u64>,
    pub assumptions: Vec<String>,
}
