//! Random admissible parameter sets and initial data shared by the
//! integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use psd_affine::model::{AffineParams, AtomicMeasure, LinearDrift, MatrixAtom, MatrixAtomicMeasure, ScalarAtom};
use psd_affine::symcore::{CSymMatrix, Mat, SymMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut TestRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_mat(rng: &mut TestRng, d: usize, scale: f64) -> Mat {
    Mat::from_fn(d, |_, _| scale * normal(rng))
}

pub fn random_sym(rng: &mut TestRng, d: usize, scale: f64) -> SymMatrix {
    SymMatrix::from_upper_fn(d, |_, _| scale * normal(rng))
}

/// `g g^T` with `g` of shape `d x rank`, so the rank is `rank` almost surely.
pub fn random_psd_rank(rng: &mut TestRng, d: usize, rank: usize, scale: f64) -> SymMatrix {
    let g: Vec<Vec<f64>> = (0..d).map(|_| (0..rank).map(|_| normal(rng)).collect()).collect();
    SymMatrix::from_upper_fn(d, |i, j| scale * (0..rank).map(|k| g[i][k] * g[j][k]).sum::<f64>() / rank.max(1) as f64)
}

pub fn random_pd(rng: &mut TestRng, d: usize, scale: f64) -> SymMatrix {
    random_psd_rank(rng, d, d, scale).add(&SymMatrix::identity(d).scale(0.2 * scale))
}

/// `Re u` positive definite, `Im u` arbitrary.
pub fn random_interior_u(rng: &mut TestRng, d: usize) -> CSymMatrix {
    let (s_re, s_im) = (rng.random_range(0.3..1.5), rng.random_range(0.0..1.5));
    let re = random_pd(rng, d, s_re);
    let im = random_sym(rng, d, s_im);
    CSymMatrix { re, im }
}

/// `Re u` singular: rank `d - 1` down to 0 (purely imaginary).
pub fn random_boundary_u(rng: &mut TestRng, d: usize, rank: usize) -> CSymMatrix {
    let re = if rank == 0 { SymMatrix::zeros(d) } else { random_psd_rank(rng, d, rank, 1.0) };
    let im = random_sym(rng, d, 1.0);
    CSymMatrix { re, im }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    Zero,
    Invertible,
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub alpha: Alpha,
    /// Allow `c > 0` and `gamma != 0`.
    pub killing: bool,
    pub jumps: bool,
    /// Force at least one `mu` atom inside and one outside the unit ball.
    pub mu_both_sides: bool,
}

impl Shape {
    pub fn new(alpha: Alpha) -> Self {
        Shape { alpha, killing: true, jumps: true, mu_both_sides: false }
    }

    pub fn conservative(alpha: Alpha) -> Self {
        Shape { killing: false, ..Shape::new(alpha) }
    }
}

/// Admissible by construction: `b = (d-1) alpha + PSD`, Lyapunov drift,
/// PSD killing and PSD jump data.
pub fn random_params(rng: &mut TestRng, d: usize, shape: Shape) -> AffineParams {
    let alpha = match shape.alpha {
        Alpha::Zero => SymMatrix::zeros(d),
        Alpha::Invertible => {
            let s = rng.random_range(0.2..1.0);
            random_pd(rng, d, s)
        }
    };
    let s = rng.random_range(0.1..1.0);
    let b = alpha.scale((d - 1) as f64).add(&random_pd(rng, d, s));
    let beta = random_mat(rng, d, 0.5);
    let (c, gamma) = if shape.killing {
        let c = rng.random_range(0.0..0.5);
        let rank = rng.random_range(0..=d);
        (c, random_psd_rank(rng, d, rank, 0.3))
    } else {
        (0.0, SymMatrix::zeros(d))
    };
    let mut m = Vec::new();
    let mut mu = Vec::new();
    if shape.jumps {
        for _ in 0..rng.random_range(0..=2) {
            let (rank, scale) = (rng.random_range(1..=d), rng.random_range(0.1..1.5));
            let xi = random_psd_rank(rng, d, rank, scale);
            m.push(ScalarAtom { xi, weight: rng.random_range(0.1..1.0) });
        }
        let n_mu = if shape.mu_both_sides { 2 } else { rng.random_range(0..=2) };
        for k in 0..n_mu {
            let rank = rng.random_range(1..=d);
            let xi = random_psd_rank(rng, d, rank, 1.0);
            // inside or outside the unit ball, alternating when both are required
            let target = if shape.mu_both_sides { if k == 0 { 0.5 } else { 2.0 } } else { rng.random_range(0.2..2.5) };
            let xi = xi.scale(target / xi.frobenius_norm());
            let rank = rng.random_range(1..=d);
            mu.push(MatrixAtom { xi, weight_matrix: random_psd_rank(rng, d, rank, 0.3) });
        }
    }
    AffineParams::new(alpha, b, LinearDrift::lyapunov(beta), c, gamma, AtomicMeasure::new(m), MatrixAtomicMeasure::new(mu))
        .expect("well-formed random parameters")
}

pub fn cnorm(u: &CSymMatrix) -> f64 {
    (u.re.frobenius_norm().powi(2) + u.im.frobenius_norm().powi(2)).sqrt()
}

pub fn cdist(a: &CSymMatrix, b: &CSymMatrix) -> f64 {
    (a.re.sub(&b.re).frobenius_norm().powi(2) + a.im.sub(&b.im).frobenius_norm().powi(2)).sqrt()
}

/// Relative error `|a - b| / |b|`, absolute when `b` vanishes.
pub fn rel(a: Complex64, b: Complex64) -> f64 {
    let n = b.norm();
    if n > 0.0 {
        (a - b).norm() / n
    } else {
        a.norm()
    }
}

pub fn rel_mat(a: &CSymMatrix, b: &CSymMatrix) -> f64 {
    let n = cnorm(b);
    if n > 0.0 {
        cdist(a, b) / n
    } else {
        cnorm(a)
    }
}

/// PSD of random rank `0..=d`.
pub fn random_psd(rng: &mut TestRng, d: usize, scale: f64) -> SymMatrix {
    let rank = rng.random_range(0..=d);
    random_psd_rank(rng, d, rank, scale)
}

/// `Re u` PSD of random rank, `Im u` arbitrary.
pub fn random_tube_u(rng: &mut TestRng, d: usize, re_scale: f64, im_scale: f64) -> CSymMatrix {
    let re = random_psd(rng, d, re_scale);
    CSymMatrix { re, im: random_sym(rng, d, im_scale) }
}
