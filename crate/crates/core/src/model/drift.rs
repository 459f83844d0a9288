use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symcore::{svec_len, CSymMatrix, Mat, SymMatrix};

/// Linear drift `B: S_d -> S_d`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearDrift {
    /// `B(x) = beta x + x beta^T` for a real `d x d` matrix `beta`.
    Lyapunov { beta: Mat },
    /// `D x D` matrix (`D = d(d+1)/2`) acting on the isometric vectorization
    /// of [`SymMatrix::svec`].
    General { matrix: Mat },
}

const POWER_ITERATIONS: usize = 200;
const POWER_REL_TOL: f64 = 1e-12;

impl LinearDrift {
    pub fn zero(d: usize) -> Self {
        LinearDrift::Lyapunov { beta: Mat::zeros(d) }
    }

    pub fn lyapunov(beta: Mat) -> Self {
        LinearDrift::Lyapunov { beta }
    }

    pub fn general(matrix: Mat) -> Self {
        LinearDrift::General { matrix }
    }

    /// Dimension check against the state dimension `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        let (expected, got) = match self {
            LinearDrift::Lyapunov { beta } => (d, beta.dim()),
            LinearDrift::General { matrix } => (svec_len(d), matrix.dim()),
        };
        if expected != got {
            return Err(Error::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    pub fn apply(&self, x: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(x.dim())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &SymMatrix) -> SymMatrix {
        match self {
            LinearDrift::Lyapunov { beta } => {
                let bx = beta.matmul(x.as_mat());
                SymMatrix::from_upper_fn(x.dim(), |i, j| bx[(i, j)] + bx[(j, i)])
            }
            LinearDrift::General { matrix } => apply_vectorized(matrix, x),
        }
    }

    /// Adjoint with respect to the trace inner product.
    pub fn apply_adjoint(&self, u: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(u.dim())?;
        Ok(self.adjoint_unchecked(u))
    }

    pub(crate) fn adjoint_unchecked(&self, u: &SymMatrix) -> SymMatrix {
        match self {
            LinearDrift::Lyapunov { beta } => {
                // beta^T u + u beta
                let ub = u.as_mat().matmul(beta);
                SymMatrix::from_upper_fn(u.dim(), |i, j| ub[(i, j)] + ub[(j, i)])
            }
            LinearDrift::General { matrix } => apply_vectorized(&matrix.transpose(), u),
        }
    }

    pub fn apply_adjoint_complex(&self, u: &CSymMatrix) -> Result<CSymMatrix> {
        self.check_dim(u.dim())?;
        Ok(self.adjoint_complex_unchecked(u))
    }

    pub(crate) fn adjoint_complex_unchecked(&self, u: &CSymMatrix) -> CSymMatrix {
        CSymMatrix { re: self.adjoint_unchecked(&u.re), im: self.adjoint_unchecked(&u.im) }
    }

    /// Matrix of the map in the isometric vectorization basis.
    pub fn to_matrix(&self, d: usize) -> Result<Mat> {
        self.check_dim(d)?;
        match self {
            LinearDrift::General { matrix } => Ok(matrix.clone()),
            LinearDrift::Lyapunov { .. } => {
                let dd = svec_len(d);
                let mut m = Mat::zeros(dd);
                for k in 0..dd {
                    let col = self.apply_unchecked(&SymMatrix::svec_basis(d, k)).svec();
                    for (r, v) in col.into_iter().enumerate() {
                        m[(r, k)] = v;
                    }
                }
                Ok(m)
            }
        }
    }

    /// Same map expressed as the `General` variant.
    pub fn to_general(&self, d: usize) -> Result<LinearDrift> {
        Ok(LinearDrift::General { matrix: self.to_matrix(d)? })
    }

    /// Operator norm of the adjoint drift for the trace norm, by power
    /// iteration on `M M^T` of the vectorized map.
    pub fn adjoint_operator_norm(&self, d: usize) -> Result<f64> {
        let m = self.to_matrix(d)?;
        let mt = m.transpose();
        // ||B^T|| = sqrt(lambda_max(M M^T))
        let gram = m.matmul(&mt);
        let dd = gram.dim();
        let mut v: Vec<f64> = (0..dd).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm == 0.0 {
                return Ok(0.0);
            }
            v.iter_mut().for_each(|x| *x /= nrm);
            let w: Vec<f64> = (0..dd).map(|i| (0..dd).map(|j| gram[(i, j)] * v[j]).sum()).collect();
            let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            v = w;
            if (next - lambda).abs() <= POWER_REL_TOL * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        Ok(lambda.max(0.0).sqrt())
    }

    pub fn as_lyapunov_beta(&self) -> Option<&Mat> {
        match self {
            LinearDrift::Lyapunov { beta } => Some(beta),
            LinearDrift::General { .. } => None,
        }
    }
}

fn apply_vectorized(matrix: &Mat, x: &SymMatrix) -> SymMatrix {
    let v = x.svec();
    let dd = v.len();
    let out: Vec<f64> = (0..dd).map(|i| (0..dd).map(|j| matrix[(i, j)] * v[j]).sum()).collect();
    SymMatrix::from_svec(x.dim(), &out).expect("vectorized dimension")
}

/// `<B(x), u>` with `u` complex.
pub fn drift_pairing(drift: &LinearDrift, x: &SymMatrix, u: &CSymMatrix) -> Result<Complex64> {
    Ok(u.dot_real(&drift.apply(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_upper_fn(d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn lyapunov_adjoint_formula() {
        let beta = Mat::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.1]]).unwrap();
        let drift = LinearDrift::lyapunov(beta.clone());
        let u = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, -2.0]]).unwrap();
        let expected = SymMatrix::symmetrize(&(&beta.transpose().matmul(u.as_mat()) + &u.as_mat().matmul(&beta)));
        assert!(drift.apply_adjoint(&u).unwrap().sub(&expected).frobenius_norm() < 1e-15);
    }

    #[test]
    fn adjointness_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..5 {
            let beta = Mat::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let general = Mat::from_fn(svec_len(d), |_, _| rng.random_range(-1.0..1.0));
            for drift in [LinearDrift::lyapunov(beta), LinearDrift::general(general)] {
                for _ in 0..50 {
                    let x = rand_sym(d, &mut rng);
                    let u = rand_sym(d, &mut rng);
                    let lhs = drift.apply(&x).unwrap().dot(&u);
                    let rhs = x.dot(&drift.apply_adjoint(&u).unwrap());
                    assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x.frobenius_norm() * u.frobenius_norm()));
                }
            }
        }
    }

    #[test]
    fn general_roundtrip_matches_lyapunov() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let beta = Mat::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let lyap = LinearDrift::lyapunov(beta);
        let gen = lyap.to_general(3).unwrap();
        for _ in 0..10 {
            let x = rand_sym(3, &mut rng);
            let a = lyap.apply(&x).unwrap();
            let b = gen.apply(&x).unwrap();
            assert!(a.sub(&b).frobenius_norm() < 1e-13);
            let a = lyap.apply_adjoint(&x).unwrap();
            let b = gen.apply_adjoint(&x).unwrap();
            assert!(a.sub(&b).frobenius_norm() < 1e-13);
        }
    }

    #[test]
    fn zero_drift_is_zero() {
        let x = SymMatrix::identity(2);
        assert_eq!(LinearDrift::zero(2).apply(&x).unwrap(), SymMatrix::zeros(2));
        assert_eq!(LinearDrift::zero(2).adjoint_operator_norm(2).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_of_identity_beta_is_two() {
        let drift = LinearDrift::lyapunov(Mat::identity(3));
        assert!((drift.adjoint_operator_norm(3).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let drift = LinearDrift::lyapunov(Mat::identity(3));
        assert!(drift.apply(&SymMatrix::identity(2)).is_err());
        let gen = LinearDrift::general(Mat::identity(4));
        assert_eq!(gen.check_dim(2), Err(Error::DimensionMismatch { expected: 3, got: 4 }));
    }
}
