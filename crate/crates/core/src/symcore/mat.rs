//! Dense square matrices over `f64` and `Complex64`.
//!
//! Storage is row-major. Dimensions are small (d <= 32, or 2d for block
//! constructions) so everything is plain loops.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { n, data })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Mat::zeros(n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub(crate) fn from_vec(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Mat { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.n)
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.n);
        gemm(self.n, &self.data, &rhs.data, &mut out.data);
        out
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Mat) -> Result<Mat> {
        let n = self.n;
        if rhs.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: rhs.n });
        }
        let (lu, piv) = lu_factor(n, self.data.clone())?;
        let mut out = rhs.clone();
        for col in 0..n {
            let mut b: Vec<f64> = (0..n).map(|i| rhs[(piv[i], col)]).collect();
            lu_solve_in_place(n, &lu, &mut b);
            for i in 0..n {
                out[(i, col)] = b[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Mat> {
        self.solve(&Mat::identity(self.n))
    }

    /// Copies the `n x n` block starting at `(row, col)`.
    pub fn block(&self, row: usize, col: usize, n: usize) -> Mat {
        Mat::from_fn(n, |i, j| self[(row + i, col + j)])
    }

    /// Asymmetry `max |a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!(self.n, rhs.n);
        Mat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!(self.n, rhs.n);
        Mat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.matmul(rhs)
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

/// `out = a * b` for row-major `n x n` slices.
#[inline]
pub(crate) fn gemm(n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        row.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
}

fn lu_factor(n: usize, mut a: Vec<f64>) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut piv: Vec<usize> = (0..n).collect();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::NonFinite);
    }
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a[i * n + k].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= f64::EPSILON * scale * n as f64 || pmax == 0.0 {
            return Err(Error::Singular);
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
        }
        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / pivot;
            a[i * n + k] = f;
            for j in (k + 1)..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    Ok((a, piv))
}

fn lu_solve_in_place(n: usize, lu: &[f64], b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= lu[i * n + j] * b[j];
        }
        b[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= lu[i * n + j] * b[j];
        }
        b[i] = s / lu[i * n + i];
    }
}

/// Complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMat { n, data }
    }

    pub fn from_parts(re: &Mat, im: &Mat) -> Self {
        assert_eq!(re.dim(), im.dim());
        CMat::from_fn(re.dim(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
    }

    pub fn from_real(re: &Mat) -> Self {
        CMat::from_fn(re.dim(), |i, j| Complex64::new(re[(i, j)], 0.0))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn re(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self[(i, j)].re)
    }

    pub fn im(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self[(i, j)].im)
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat { n: self.n, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                for j in 0..n {
                    out.data[i * n + j] += aik * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// LU factorization with partial pivoting; returns the packed factors,
    /// the row permutation and its sign.
    fn lu(&self) -> Result<(Vec<Complex64>, Vec<usize>, f64)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if !scale.is_finite() {
            return Err(Error::NonFinite);
        }
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 || pmax <= f64::EPSILON * scale * n as f64 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in (k + 1)..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        Ok((a, piv, sign))
    }

    pub fn det(&self) -> Complex64 {
        match self.lu() {
            Ok((lu, _, sign)) => {
                let n = self.n;
                (0..n).fold(Complex64::new(sign, 0.0), |acc, i| acc * lu[i * n + i])
            }
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &CMat) -> Result<CMat> {
        let n = self.n;
        if rhs.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: rhs.n });
        }
        let (lu, piv, _) = self.lu()?;
        let mut out = CMat::zeros(n);
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for col in 0..n {
            for i in 0..n {
                b[i] = rhs[(piv[i], col)];
            }
            for i in 0..n {
                let mut s = b[i];
                for j in 0..i {
                    s -= lu[i * n + j] * b[j];
                }
                b[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = b[i];
                for j in (i + 1)..n {
                    s -= lu[i * n + j] * b[j];
                }
                b[i] = s / lu[i * n + i];
            }
            for i in 0..n {
                out[(i, col)] = b[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<CMat> {
        self.solve(&CMat::identity(self.n))
    }

    /// 1-norm condition number estimate computed from the explicit inverse.
    pub fn condition_one(&self) -> f64 {
        let norm1 = |m: &CMat| {
            (0..m.n)
                .map(|j| (0..m.n).map(|i| m[(i, j)].norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        match self.inverse() {
            Ok(inv) => norm1(self) * norm1(&inv),
            Err(_) => f64::INFINITY,
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}
