//! Trace inequalities on the tube and complementary boundary pairs of the cone.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::mat::{CMat, Mat};
use super::sym::{CSymMatrix, SymMatrix, PSD_TOL};
use crate::error::{Error, Result};

/// `Re tr(conj(x) x alpha x)`.
///
/// Non-negative when `Re x` is PSD and `alpha` is a non-negative multiple of
/// the identity; can be negative for degenerate `alpha`.
pub fn riccati_quadratic_real(x: &CSymMatrix, alpha: &SymMatrix) -> Result<f64> {
    if x.dim() != alpha.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: alpha.dim() });
    }
    let xc = x.to_cmat();
    let a = CMat::from_real(alpha.as_mat());
    Ok(xc.conj().matmul(&xc).matmul(&a).matmul(&xc).trace().re)
}

/// Value of `Re tr(b conj(a)^T a)` plus whether the precondition on `b` held.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaBForm {
    pub value: f64,
    /// Whether `Re b` was PSD within tolerance; the value is reported either way.
    pub precondition_ok: bool,
}

/// Evaluates `Re tr(b conj(a)^T a)` for a complex `m x n` matrix `a` given as
/// rows and `b` in the tube over `S_n^+`.
pub fn lemma_b_form(b: &CSymMatrix, a: &[Vec<Complex64>]) -> Result<LemmaBForm> {
    let n = b.dim();
    for row in a {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
    }
    // gram = conj(a)^T a, n x n
    let gram = CMat::from_fn(n, |i, j| a.iter().map(|row| row[i].conj() * row[j]).sum());
    let value = b.to_cmat().matmul(&gram).trace().re;
    Ok(LemmaBForm { value, precondition_ok: b.re.is_psd(PSD_TOL) })
}

/// A pair `x, u` of PSD matrices with `tr(xu) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    pub x: SymMatrix,
    pub u: SymMatrix,
    pub label: String,
}

impl BoundaryPair {
    /// `max(||xu||, ||ux||)`, zero for an exactly complementary pair.
    pub fn complementarity_residual(&self) -> f64 {
        let xu = self.x.as_mat().matmul(self.u.as_mat());
        let ux = self.u.as_mat().matmul(self.x.as_mat());
        xu.frobenius_norm().max(ux.frobenius_norm())
    }
}

/// Canonical boundary pairs `(e+^ij, e-^ij)`, `(e-^ij, e+^ij)` and
/// `(c^ii, I - c^ii)`.
pub fn canonical_boundary_pairs(d: usize) -> Result<Vec<BoundaryPair>> {
    if d < 2 {
        return Err(Error::Domain(format!("boundary pairs need d >= 2, got {d}")));
    }
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let cii = SymMatrix::canonical(d, i, i);
            let cjj = SymMatrix::canonical(d, j, j);
            let cij = SymMatrix::canonical(d, i, j);
            let diag = cii.add(&cjj);
            let plus = diag.add(&cij);
            let minus = diag.sub(&cij);
            pairs.push(BoundaryPair { x: plus.clone(), u: minus.clone(), label: format!("e+({i},{j}), e-({i},{j})") });
            pairs.push(BoundaryPair { x: minus, u: plus, label: format!("e-({i},{j}), e+({i},{j})") });
        }
    }
    for i in 0..d {
        let cii = SymMatrix::canonical(d, i, i);
        let star = SymMatrix::identity(d).sub(&cii);
        pairs.push(BoundaryPair { x: cii, u: star, label: format!("c({i},{i}), c*({i})") });
    }
    Ok(pairs)
}

/// Random orthogonal matrix from the eigenvectors of a random symmetric matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Mat> {
    let g = SymMatrix::from_upper_fn(d, |_, _| rng.sample(StandardNormal));
    Ok(g.eigen()?.eigenvectors)
}

/// Random complementary pair: `x` spans the first `rank` columns of a random
/// orthogonal basis and `u` the rest, both with random positive weights.
pub fn random_boundary_pair<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<BoundaryPair> {
    if d < 2 || rank == 0 || rank >= d {
        return Err(Error::Domain(format!("random boundary pair needs d >= 2 and 0 < rank < d (d={d}, rank={rank})")));
    }
    let q = random_orthogonal(d, rng)?;
    let weights: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..2.0)).collect();
    let build = |cols: std::ops::Range<usize>| {
        SymMatrix::from_upper_fn(d, |i, j| cols.clone().map(|k| weights[k] * q[(i, k)] * q[(j, k)]).sum())
    };
    Ok(BoundaryPair { x: build(0..rank), u: build(rank..d), label: format!("random(rank {rank})") })
}

/// Canonical pairs followed by `n_random` randomized pairs of random rank.
pub fn boundary_pairs<R: Rng + ?Sized>(d: usize, n_random: usize, rng: &mut R) -> Result<Vec<BoundaryPair>> {
    let mut pairs = canonical_boundary_pairs(d)?;
    for _ in 0..n_random {
        let rank = rng.random_range(1..d);
        pairs.push(random_boundary_pair(d, rank, rng)?);
    }
    Ok(pairs)
}
