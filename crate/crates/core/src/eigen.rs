//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Sized for the tiny matrices of the SDR solver (dimension 2Nt+1), where
//! Jacobi is simple and accurate. Capped at 100 sweeps.

use crate::error::{Error, Result};
use crate::mat::Mat;

const MAX_SWEEPS: usize = 100;

/// Eigen-pairs of a symmetric matrix: `a = V diag(values) Vᵀ` with the
/// columns of `vectors` as eigenvectors.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

fn off_diag_norm(a: &Mat) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigen(a: &Mat, tolerance: f64) -> Result<SymEigen> {
    assert_eq!(a.rows(), a.cols(), "sym_eigen requires a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Mat::identity(n);

    for _sweep in 0..MAX_SWEEPS {
        if off_diag_norm(&m) <= tolerance {
            let values = (0..n).map(|i| m[(i, i)]).collect();
            return Ok(SymEigen { values, vectors: v });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // classic stable rotation (Golub & Van Loan)
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let residual = off_diag_norm(&m);
    if residual <= tolerance {
        let values = (0..n).map(|i| m[(i, i)]).collect();
        return Ok(SymEigen { values, vectors: v });
    }
    Err(Error::Numerical { what: format!("Jacobi sweeps exhausted after {MAX_SWEEPS}"), residual })
}

/// Projection onto the PSD cone: negative eigenvalues clipped to 0.
pub fn psd_project(a: &Mat, tolerance: f64) -> Result<Mat> {
    let eig = sym_eigen(a, tolerance)?;
    let n = a.rows();
    let mut out = Mat::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = eig.vectors[(i, k)] * lambda;
            for j in 0..n {
                out[(i, j)] += vi * eig.vectors[(j, k)];
            }
        }
    }
    // exact symmetry despite float accumulation order
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = m;
            out[(j, i)] = m;
        }
    }
    Ok(out)
}
