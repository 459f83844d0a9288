//! Single-path Euler stepping on preallocated buffers.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::DiffusionFactor;
use crate::error::{Error, Result};
use crate::model::AffineParams;
use crate::symcore::eigen::jacobi_in_place;
use crate::symcore::SymMatrix;

struct MAtom {
    xi: Vec<f64>,
    poisson: Option<Poisson<f64>>,
}

struct MuAtom {
    xi: Vec<f64>,
    weight: Vec<f64>,
}

/// Path state plus every buffer a step needs. Nothing allocates inside
/// [`Stepper::step`].
pub(crate) struct Stepper {
    d: usize,
    dt: f64,
    sqdt: f64,
    b: Vec<f64>,
    /// `vec(B(x)) = drift * vec(x)` for symmetric `x`, reading the upper triangle.
    drift: Vec<f64>,
    sigma: Vec<f64>,
    m: Vec<MAtom>,
    mu: Vec<MuAtom>,
    pub(crate) x: Vec<f64>,
    q: Vec<f64>,
    lam: Vec<f64>,
    sqrt_x: Vec<f64>,
    g: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    xn: Vec<f64>,
    work: Vec<f64>,
    pub(crate) m_counts: Vec<u64>,
    pub(crate) mu_counts: Vec<u64>,
    pub(crate) mu_compensator: Vec<f64>,
}

fn full(x: &SymMatrix) -> Vec<f64> {
    x.as_mat().as_slice().to_vec()
}

/// Dense matrix of `x -> B(x)` on row-major entries, built from the images
/// of the basis `e_i e_j^T + e_j e_i^T` (`i < j`) and `e_i e_i^T`.
fn drift_operator(params: &AffineParams) -> Vec<f64> {
    let d = params.d;
    let n = d * d;
    let mut op = vec![0.0; n * n];
    for i in 0..d {
        for j in i..d {
            let e = SymMatrix::from_upper_fn(d, |a, b| if a == i && b == j { 1.0 } else { 0.0 });
            let image = params.drift.apply_unchecked(&e);
            let col = i * d + j;
            for (row, v) in image.as_mat().as_slice().iter().enumerate() {
                op[row * n + col] = *v;
            }
        }
    }
    op
}

impl Stepper {
    pub(crate) fn new(params: &AffineParams, factor: &DiffusionFactor, dt: f64) -> Result<Self> {
        let d = params.d;
        let mut m = Vec::with_capacity(params.m.atoms.len());
        for a in &params.m.atoms {
            let rate = a.weight * dt;
            let poisson = if rate > 0.0 {
                Some(Poisson::new(rate).map_err(|e| Error::InvalidParams(format!("jump rate {rate}: {e}")))?)
            } else {
                None
            };
            m.push(MAtom { xi: full(&a.xi), poisson });
        }
        let mu = params.mu.atoms.iter().map(|a| MuAtom { xi: full(&a.xi), weight: full(&a.weight_matrix) }).collect();
        let n = d * d;
        Ok(Stepper {
            d,
            dt,
            sqdt: dt.sqrt(),
            b: full(&params.b),
            drift: drift_operator(params),
            sigma: factor.sigma.as_slice().to_vec(),
            m_counts: vec![0; params.m.atoms.len()],
            mu_counts: vec![0; params.mu.atoms.len()],
            mu_compensator: vec![0.0; params.mu.atoms.len()],
            m,
            mu,
            x: vec![0.0; n],
            q: vec![0.0; n],
            lam: vec![0.0; d],
            sqrt_x: vec![0.0; n],
            g: vec![0.0; n],
            t1: vec![0.0; n],
            t2: vec![0.0; n],
            xn: vec![0.0; n],
            work: vec![0.0; n],
        })
    }

    /// Restarts the path at `x0` (assumed PSD) and clears the jump tallies.
    pub(crate) fn reset(&mut self, x0: &SymMatrix) -> Result<()> {
        self.x.copy_from_slice(x0.as_mat().as_slice());
        self.work.copy_from_slice(&self.x);
        jacobi_in_place(self.d, &mut self.work, &mut self.lam, &mut self.q)?;
        for l in self.lam.iter_mut() {
            *l = l.max(0.0);
        }
        self.m_counts.iter_mut().for_each(|c| *c = 0);
        self.mu_counts.iter_mut().for_each(|c| *c = 0);
        self.mu_compensator.iter_mut().for_each(|c| *c = 0.0);
        Ok(())
    }

    /// One projected Euler step. `sign = -1` gives the antithetic twin.
    pub(crate) fn step<RN: Rng, RJ: Rng>(&mut self, normals: &mut RN, jumps: &mut RJ, sign: f64) -> Result<()> {
        let d = self.d;
        let n = d * d;

        // sqrt(X) from the spectrum kept after the last projection
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.q[i * d + k] * self.lam[k].sqrt() * self.q[j * d + k];
                }
                self.sqrt_x[i * d + j] = s;
                self.sqrt_x[j * d + i] = s;
            }
        }
        for g in self.g.iter_mut() {
            let z: f64 = normals.sample(StandardNormal);
            *g = sign * z;
        }
        matmul(d, &self.sqrt_x, &self.g, &mut self.t1);
        matmul(d, &self.t1, &self.sigma, &mut self.t2);

        for r in 0..n {
            let row = &self.drift[r * n..(r + 1) * n];
            let bx: f64 = row.iter().zip(&self.x).map(|(a, b)| a * b).sum();
            let (i, j) = (r / d, r % d);
            let noise = self.t2[i * d + j] + self.t2[j * d + i];
            self.xn[r] = self.x[r] + (self.b[r] + bx) * self.dt + noise * self.sqdt;
        }

        for (k, atom) in self.m.iter().enumerate() {
            if let Some(p) = &atom.poisson {
                let count = p.sample(jumps) as u64;
                if count > 0 {
                    self.m_counts[k] += count;
                    axpy(count as f64, &atom.xi, &mut self.xn);
                }
            }
        }
        for (k, atom) in self.mu.iter().enumerate() {
            let rate = atom.weight.iter().zip(&self.x).map(|(a, b)| a * b).sum::<f64>().max(0.0) * self.dt;
            self.mu_compensator[k] += rate;
            if rate > 0.0 {
                let p = Poisson::new(rate).map_err(|e| Error::Domain(format!("jump intensity {rate} along the path: {e}")))?;
                let count = p.sample(jumps) as u64;
                if count > 0 {
                    self.mu_counts[k] += count;
                    axpy(count as f64, &atom.xi, &mut self.xn);
                }
            }
        }

        for i in 0..d {
            for j in (i + 1)..d {
                let s = 0.5 * (self.xn[i * d + j] + self.xn[j * d + i]);
                self.xn[i * d + j] = s;
                self.xn[j * d + i] = s;
            }
        }
        self.work.copy_from_slice(&self.xn);
        jacobi_in_place(d, &mut self.work, &mut self.lam, &mut self.q)?;
        for l in self.lam.iter_mut() {
            *l = l.max(0.0);
        }
        debug_assert!(self.lam.iter().all(|l| *l >= 0.0));
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.q[i * d + k] * self.lam[k] * self.q[j * d + k];
                }
                self.x[i * d + j] = s;
                self.x[j * d + i] = s;
            }
        }
        Ok(())
    }

    pub(crate) fn state(&self) -> SymMatrix {
        SymMatrix::from_upper_fn(self.d, |i, j| self.x[i * self.d + j])
    }
}

fn matmul(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
