//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use super::mat::Mat;
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm bound below which [13/13] Padé reaches unit roundoff
const THETA13: f64 = 5.371920351148152;

/// `e^a` for a general real square matrix.
pub fn mat_exp(a: &Mat) -> Result<Mat> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.dim();
    let norm = a.norm_one();
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale(0.5f64.powi(squarings));

    let ident = Mat::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = &PADE13;

    let lin = |c6: f64, c4: f64, c2: f64| -> Mat { &(&a6.scale(c6) + &a4.scale(c4)) + &a2.scale(c2) };

    let u_inner = &(&a6.matmul(&lin(b[13], b[11], b[9])) + &lin(b[7], b[5], b[3])) + &ident.scale(b[1]);
    let u = a.matmul(&u_inner);
    let v = &(&a6.matmul(&lin(b[12], b[10], b[8])) + &lin(b[6], b[4], b[2])) + &ident.scale(b[0]);

    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gives_identity() {
        let e = mat_exp(&Mat::zeros(3)).unwrap();
        assert_eq!(e, Mat::identity(3));
    }

    #[test]
    fn nilpotent_matches_truncated_taylor() {
        // Taylor series terminates: I + N
        let nil = Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = mat_exp(&nil).unwrap();
        let expected = Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!((&e - &expected).frobenius_norm() < 1e-15);
    }

    #[test]
    fn diagonal_large_norm() {
        let a = Mat::from_diag(&[-20.0, 3.0, 10.0]);
        let e = mat_exp(&a).unwrap();
        for (i, l) in [-20.0f64, 3.0, 10.0].iter().enumerate() {
            let rel = (e[(i, i)] - l.exp()).abs() / l.exp();
            assert!(rel < 1e-13, "rel {rel}");
        }
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, -t],[t, 0]]) = [[cos t, -sin t],[sin t, cos t]]
        let t = 7.3;
        let a = Mat::from_rows(&[vec![0.0, -t], vec![t, 0.0]]).unwrap();
        let e = mat_exp(&a).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-13);
    }
}
