//! Small dense symmetric linear algebra on row-major `Vec<f64>` buffers.
//!
//! Dimensions here are tiny (d <= 10), so plain loops beat pulling in a
//! matrix crate, and keeping the ops local makes rounding deterministic.

use crate::error::{Error, Result};

/// Cholesky factorization A = L L^T of a symmetric positive-definite matrix.
/// Returns the lower factor, or `None` if a pivot is nonpositive or not finite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve L y = b for lower-triangular L.
pub fn forward_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    y
}

/// log det A from its Cholesky factor.
pub fn log_det_from_chol(l: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        acc += l[i * n + i].ln();
    }
    2.0 * acc
}

/// Smallest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
pub fn sym_min_eigenvalue(a: &[f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    if n == 1 {
        return a[0];
    }
    let mut m = a.to_vec();
    // Symmetrize first so rotations stay consistent.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let scale: f64 = m.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for _sweep in 0..50 {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i * n + j].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).fold(f64::INFINITY, f64::min)
}

/// Regularize a symmetric matrix in place so its minimum eigenvalue is at
/// least `floor`: symmetrizes, then adds `(floor - min_eig) I` if needed.
/// Errors if the matrix contains non-finite entries.
pub fn regularize_spd(sigma: &mut [f64], n: usize, floor: f64) -> Result<()> {
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Linalg("covariance has non-finite entries".into()));
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (sigma[i * n + j] + sigma[j * n + i]);
            sigma[i * n + j] = avg;
            sigma[j * n + i] = avg;
        }
    }
    let min_eig = sym_min_eigenvalue(sigma, n);
    if min_eig < floor {
        let bump = floor - min_eig;
        for i in 0..n {
            sigma[i * n + i] += bump;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        // A = [[4,2],[2,3]] -> L = [[2,0],[1,sqrt(2)]]
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-15);
        assert!((l[2] - 1.0).abs() < 1e-15);
        assert!((l[3] - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn jacobi_min_eigenvalue() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let a = vec![2.0, 1.0, 1.0, 2.0];
        assert!((sym_min_eigenvalue(&a, 2) - 1.0).abs() < 1e-12);
        // Zero matrix.
        assert!(sym_min_eigenvalue(&[0.0; 9], 3).abs() < 1e-300);
    }

    #[test]
    fn regularize_lifts_to_floor() {
        let mut a = vec![0.0; 4];
        regularize_spd(&mut a, 2, 1e-8).unwrap();
        assert_eq!(a, vec![1e-8, 0.0, 0.0, 1e-8]);
        // Already well-conditioned: untouched diagonal.
        let mut b = vec![2.0, 0.0, 0.0, 2.0];
        regularize_spd(&mut b, 2, 1e-8).unwrap();
        assert_eq!(b, vec![2.0, 0.0, 0.0, 2.0]);
    }
}
