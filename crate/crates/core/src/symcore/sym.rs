//! Real symmetric and complex-symmetric matrices with the trace inner product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::jacobi_in_place;
use super::mat::{CMat, Mat};
use crate::error::{Error, Result};

/// Relative slack on the smallest eigenvalue below which a matrix still
/// counts as positive semidefinite: `lambda_min >= -PSD_TOL * max(1, ||x||)`.
pub const PSD_TOL: f64 = 1e-10;

/// Real symmetric `d x d` matrix. Symmetry is exact: both triangles hold
/// bit-identical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(Mat);

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(s: SymMatrix) -> Self {
        s.to_rows()
    }
}

impl SymMatrix {
    pub fn zeros(d: usize) -> Self {
        SymMatrix(Mat::zeros(d))
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix(Mat::identity(d))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymMatrix(Mat::from_diag(diag))
    }

    /// Builds a matrix from its upper triangle; `f` is called for `i <= j`.
    pub fn from_upper_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in i..d {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    /// Parses row-major nested rows; rejects any asymmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        SymMatrix::from_mat(Mat::from_rows(rows)?)
    }

    pub fn from_mat(m: Mat) -> Result<Self> {
        let d = m.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Averages `m` with its transpose.
    pub fn symmetrize(m: &Mat) -> Self {
        SymMatrix::from_upper_fn(m.dim(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(self.0.scale(s))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Norm induced by the trace inner product.
    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    /// `tr(self * other)`; panics on dimension mismatch.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "trace inner product dimension mismatch");
        self.0.as_slice().iter().zip(other.0.as_slice()).map(|(a, b)| a * b).sum()
    }

    /// `a * self * a^T`.
    pub fn congruence(&self, a: &Mat) -> SymMatrix {
        SymMatrix::symmetrize(&a.matmul(&self.0).matmul(&a.transpose()))
    }

    pub fn eigen(&self) -> Result<Spectrum> {
        let d = self.dim();
        let mut work = self.0.as_slice().to_vec();
        let mut values = vec![0.0; d];
        let mut vectors = vec![0.0; d * d];
        jacobi_in_place(d, &mut work, &mut values, &mut vectors)?;
        Ok(Spectrum { eigenvalues: values, eigenvectors: Mat::from_vec(d, vectors) })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigen()?.eigenvalues[0])
    }

    /// Positive semidefiniteness with relative slack `tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        match self.min_eigenvalue() {
            Ok(l) => l >= -tol * self.frobenius_norm().max(1.0),
            Err(_) => false,
        }
    }

    pub fn is_positive_definite(&self, tol: f64) -> bool {
        match self.min_eigenvalue() {
            Ok(l) => l > tol * self.frobenius_norm().max(1.0),
            Err(_) => false,
        }
    }

    /// Nearest positive semidefinite matrix in the Frobenius norm.
    pub fn psd_project(&self) -> Result<SymMatrix> {
        Ok(self.eigen()?.map_eigenvalues(|l| l.max(0.0)))
    }

    /// Principal square root; rejects non-PSD input.
    pub fn sqrt_psd(&self) -> Result<SymMatrix> {
        let spec = self.eigen()?;
        let lmin = spec.eigenvalues[0];
        if lmin < -PSD_TOL * self.frobenius_norm().max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: lmin });
        }
        Ok(spec.map_eigenvalues(|l| l.max(0.0).sqrt()))
    }

    /// Isometric vectorization in the basis `{c^ij, i <= j}`, ordered row by
    /// row over the upper triangle, with off-diagonal coordinates scaled by
    /// `sqrt(2)` so that `svec(x) . svec(y) = tr(xy)`.
    pub fn svec(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                let v = self.get(i, j);
                out.push(if i == j { v } else { v * std::f64::consts::SQRT_2 });
            }
        }
        out
    }

    pub fn from_svec(d: usize, v: &[f64]) -> Result<SymMatrix> {
        let dd = svec_len(d);
        if v.len() != dd {
            return Err(Error::DimensionMismatch { expected: dd, got: v.len() });
        }
        let mut k = 0;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in i..d {
                let val = if i == j { v[k] } else { v[k] / std::f64::consts::SQRT_2 };
                m[(i, j)] = val;
                m[(j, i)] = val;
                k += 1;
            }
        }
        Ok(SymMatrix(m))
    }

    /// Orthonormal basis element with index `k` of the isometric vectorization.
    pub fn svec_basis(d: usize, k: usize) -> SymMatrix {
        let mut v = vec![0.0; svec_len(d)];
        v[k] = 1.0;
        SymMatrix::from_svec(d, &v).expect("basis index within range")
    }

    /// Canonical basis element `c^ij` (ones at `(i,j)` and `(j,i)`).
    pub fn canonical(d: usize, i: usize, j: usize) -> SymMatrix {
        let mut m = Mat::zeros(d);
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
        SymMatrix(m)
    }
}

/// Dimension `d(d+1)/2` of the vectorized symmetric matrices.
pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Eigen-decomposition `x = Q diag(lambda) Q^T`, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthogonal matrix whose columns are eigenvectors.
    pub eigenvectors: Mat,
}

impl Spectrum {
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.eigenvalues.len();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let q = &self.eigenvectors;
        SymMatrix::from_upper_fn(d, |i, j| (0..d).map(|k| q[(i, k)] * mapped[k] * q[(j, k)]).sum())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map_eigenvalues(|l| l)
    }
}

/// Complex symmetric matrix `re + i im`, an element of the tube `S_d + i S_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CSymMatrix {
    pub re: SymMatrix,
    pub im: SymMatrix,
}

impl CSymMatrix {
    pub fn new(re: SymMatrix, im: SymMatrix) -> Result<Self> {
        if re.dim() != im.dim() {
            return Err(Error::DimensionMismatch { expected: re.dim(), got: im.dim() });
        }
        Ok(CSymMatrix { re, im })
    }

    pub fn zeros(d: usize) -> Self {
        CSymMatrix { re: SymMatrix::zeros(d), im: SymMatrix::zeros(d) }
    }

    pub fn from_real(re: SymMatrix) -> Self {
        let d = re.dim();
        CSymMatrix { re, im: SymMatrix::zeros(d) }
    }

    pub fn from_imag(im: SymMatrix) -> Self {
        let d = im.dim();
        CSymMatrix { re: SymMatrix::zeros(d), im }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.re.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re.get(i, j), self.im.get(i, j))
    }

    pub fn add(&self, other: &CSymMatrix) -> CSymMatrix {
        CSymMatrix { re: self.re.add(&other.re), im: self.im.add(&other.im) }
    }

    pub fn sub(&self, other: &CSymMatrix) -> CSymMatrix {
        CSymMatrix { re: self.re.sub(&other.re), im: self.im.sub(&other.im) }
    }

    pub fn add_real(&self, other: &SymMatrix) -> CSymMatrix {
        CSymMatrix { re: self.re.add(other), im: self.im.clone() }
    }

    pub fn scale(&self, s: f64) -> CSymMatrix {
        CSymMatrix { re: self.re.scale(s), im: self.im.scale(s) }
    }

    pub fn scale_complex(&self, z: Complex64) -> CSymMatrix {
        CSymMatrix {
            re: self.re.scale(z.re).sub(&self.im.scale(z.im)),
            im: self.re.scale(z.im).add(&self.im.scale(z.re)),
        }
    }

    pub fn conj(&self) -> CSymMatrix {
        CSymMatrix { re: self.re.clone(), im: self.im.scale(-1.0) }
    }

    /// Bilinear `tr(self * other)` (no conjugation).
    pub fn dot(&self, other: &CSymMatrix) -> Complex64 {
        Complex64::new(
            self.re.dot(&other.re) - self.im.dot(&other.im),
            self.re.dot(&other.im) + self.im.dot(&other.re),
        )
    }

    /// `tr(self * x)` for real symmetric `x`.
    pub fn dot_real(&self, x: &SymMatrix) -> Complex64 {
        Complex64::new(self.re.dot(x), self.im.dot(x))
    }

    /// `sqrt(tr(conj(self) * self))`.
    pub fn frobenius_norm(&self) -> f64 {
        (self.re.dot(&self.re) + self.im.dot(&self.im)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_parts(self.re.as_mat(), self.im.as_mat())
    }

    pub fn from_cmat_symmetrized(m: &CMat) -> CSymMatrix {
        CSymMatrix { re: SymMatrix::symmetrize(&m.re()), im: SymMatrix::symmetrize(&m.im()) }
    }

    /// `self * a * self` for real symmetric `a`, computed in real arithmetic.
    pub fn sandwich(&self, a: &SymMatrix) -> CSymMatrix {
        let (x, y, am) = (self.re.as_mat(), self.im.as_mat(), a.as_mat());
        let xa = x.matmul(am);
        let ya = y.matmul(am);
        let re = &xa.matmul(x) - &ya.matmul(y);
        let im = &xa.matmul(y) + &ya.matmul(x);
        debug_assert!(re.asymmetry() <= 1e-9 * (1.0 + re.frobenius_norm()));
        debug_assert!(im.asymmetry() <= 1e-9 * (1.0 + im.frobenius_norm()));
        CSymMatrix { re: SymMatrix::symmetrize(&re), im: SymMatrix::symmetrize(&im) }
    }

    /// Projection of the real part onto the cone: `pi(re) + i im`.
    pub fn project_real(&self) -> Result<CSymMatrix> {
        Ok(CSymMatrix { re: self.re.psd_project()?, im: self.im.clone() })
    }
}

/// Trace inner product of real symmetric matrices.
pub fn trace_inner(x: &SymMatrix, y: &SymMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(x.dot(y))
}

/// Trace inner product on the complex tube (bilinear, no conjugation).
pub fn trace_inner_complex(x: &CSymMatrix, y: &CSymMatrix) -> Result<Complex64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(x.dot(y))
}

/// Nearest PSD matrix.
pub fn psd_project(x: &SymMatrix) -> Result<SymMatrix> {
    x.psd_project()
}

pub fn is_psd(x: &SymMatrix, tol: f64) -> bool {
    x.is_psd(tol)
}

pub fn sqrt_psd(x: &SymMatrix) -> Result<SymMatrix> {
    x.sqrt_psd()
}
