//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Relative off-diagonal tolerance at which the sweeps stop.
pub const JACOBI_TOL: f64 = 1e-13;

/// Diagonalizes the symmetric row-major `n x n` matrix held in `a`.
///
/// On return `a` is destroyed, `values` holds the eigenvalues in ascending
/// order and `vectors` holds the matching orthonormal eigenvectors as
/// columns (row-major storage). Works entirely in the caller's buffers.
pub fn jacobi_in_place(n: usize, a: &mut [f64], values: &mut [f64], vectors: &mut [f64]) -> Result<()> {
    debug_assert!(a.len() >= n * n && values.len() >= n && vectors.len() >= n * n);
    let mut total = 0.0;
    for v in a[..n * n].iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        total += v * v;
    }
    for i in 0..n {
        for j in 0..n {
            vectors[i * n + j] = if i == j { 1.0 } else { 0.0 };
        }
    }
    let threshold = JACOBI_TOL * total.sqrt();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = vectors[k * n + p];
                    let vkq = vectors[k * n + q];
                    vectors[k * n + p] = c * vkp - s * vkq;
                    vectors[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence);
    }

    for i in 0..n {
        values[i] = a[i * n + i];
    }
    // insertion sort, small n
    for i in 1..n {
        let mut j = i;
        while j > 0 && values[j - 1] > values[j] {
            values.swap(j - 1, j);
            for k in 0..n {
                vectors.swap(k * n + j - 1, k * n + j);
            }
            j -= 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_is_sorted() {
        let mut a = vec![3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0];
        let mut w = vec![0.0; 3];
        let mut v = vec![0.0; 9];
        jacobi_in_place(3, &mut a, &mut w, &mut v).unwrap();
        assert_eq!(w, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let mut a = vec![2.0, 1.0, 1.0, 2.0];
        let mut w = vec![0.0; 2];
        let mut v = vec![0.0; 4];
        jacobi_in_place(2, &mut a, &mut w, &mut v).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 3.0).abs() < 1e-15);
        // eigenvector of 1 is (1,-1)/sqrt2 up to sign
        assert!((v[0].abs() - v[2].abs()).abs() < 1e-15);
        assert!(v[0] * v[2] < 0.0);
    }

    #[test]
    fn nan_is_rejected() {
        let mut a = vec![1.0, f64::NAN, f64::NAN, 1.0];
        let mut w = vec![0.0; 2];
        let mut v = vec![0.0; 4];
        assert_eq!(jacobi_in_place(2, &mut a, &mut w, &mut v), Err(Error::NonFinite));
    }
}
