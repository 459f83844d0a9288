//! Euler simulation of the conservative process as an independent check on
//! the transform.
//!
//! Every path draws from its own ChaCha8 streams keyed by `(seed, path)`,
//! one for the Gaussian increments and one for the jumps, and per-path
//! results are reduced by pairwise summation in path order. The estimate is
//! therefore bit-identical however the paths are spread over threads.

mod path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AffineParams;
use crate::symcore::{CSymMatrix, Mat, SymMatrix, PSD_TOL};
use path::Stepper;

/// Environment variable capping the number of simulation workers.
pub const THREADS_ENV: &str = "PSDAFFINE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler step followed by spectral projection onto the cone.
    #[default]
    EulerProject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Pairs paths `2k, 2k + 1` with negated Gaussian increments. Jumps stay independent.
    pub antithetic: bool,
    /// Worker count; `None` uses the machine parallelism. Either way capped by
    /// `PSDAFFINE_THREADS`.
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { n_paths: 10_000, dt: 1.0 / 256.0, seed: 0, scheme: Scheme::EulerProject, antithetic: false, threads: None }
    }
}

impl SimConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64) -> Self {
        SimConfig { n_paths, dt, seed, ..Default::default() }
    }

    pub fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return Err(Error::InvalidParams("antithetic sampling needs an even number of paths".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParams("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: Complex64,
    /// Larger of the standard errors of the real and imaginary parts.
    pub stderr: f64,
    pub n_paths: usize,
    /// Step actually used, `T / ceil(T / dt)`.
    pub dt: f64,
}

/// Realized jump count of one atom against its compensator, both summed over
/// all paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpCheck {
    /// `"m"` or `"mu"`.
    pub measure: &'static str,
    pub atom: usize,
    pub realized: u64,
    pub compensator: f64,
    /// `(realized - compensator) / sqrt(compensator)`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    /// One estimate per requested `u`.
    pub estimates: Vec<MCEstimate>,
    pub jumps: Vec<JumpCheck>,
    pub n_steps: usize,
    pub dt: f64,
}

/// `Sigma` with `Sigma^T Sigma = alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionFactor {
    pub sigma: Mat,
}

impl DiffusionFactor {
    /// `||Sigma^T Sigma - alpha||`.
    pub fn residual(&self, alpha: &SymMatrix) -> f64 {
        let sts = self.sigma.transpose().matmul(&self.sigma);
        sts.as_slice().iter().zip(alpha.as_mat().as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// `Sigma = diag(sqrt(lambda)) Q^T` from `alpha = Q diag(lambda) Q^T`.
pub fn diffusion_factor(alpha: &SymMatrix) -> Result<DiffusionFactor> {
    let spec = alpha.eigen()?;
    let d = alpha.dim();
    let lmin = spec.eigenvalues[0];
    if lmin < -PSD_TOL * alpha.frobenius_norm().max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: lmin });
    }
    let q = &spec.eigenvectors;
    let sigma = Mat::from_fn(d, |i, j| spec.eigenvalues[i].max(0.0).sqrt() * q[(j, i)]);
    Ok(DiffusionFactor { sigma })
}

fn check_inputs(params: &AffineParams, x: &SymMatrix) -> Result<()> {
    params.require_conservative()?;
    if x.dim() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: x.dim() });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if !x.is_psd(PSD_TOL) {
        return Err(Error::NotPsd { min_eigenvalue: x.min_eigenvalue()? });
    }
    Ok(())
}

/// One projected Euler step of length `dt` from `x`, drawing both the
/// Gaussian increments and the jumps from `rng`.
pub fn step<R: rand::Rng>(params: &AffineParams, x: &SymMatrix, dt: f64, rng: &mut R) -> Result<SymMatrix> {
    check_inputs(params, x)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be positive and finite, got {dt}")));
    }
    let factor = diffusion_factor(&params.alpha)?;
    let mut stepper = Stepper::new(params, &factor, dt)?;
    stepper.reset(x)?;
    // a single generator serves both draws; split streams only matter across paths
    let mut jumps = ChaCha8Rng::from_rng(rng);
    stepper.step(rng, &mut jumps, 1.0)?;
    Ok(stepper.state())
}

/// Number of steps and the step length so that `n_steps * dt == t`.
pub fn step_grid(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("horizon must be nonnegative and finite, got {t}")));
    }
    if t == 0.0 {
        return Ok((0, 0.0));
    }
    if dt > t * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!("dt = {dt} exceeds the horizon {t}")));
    }
    let ratio = t / dt;
    let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio { ratio.round() } else { ratio.ceil() };
    let n = n.max(1.0) as usize;
    Ok((n, t / n as f64))
}

/// Effective worker count: `requested` (or the machine parallelism), capped
/// by `PSDAFFINE_THREADS` when that is a positive integer.
pub fn worker_count(requested: Option<usize>) -> usize {
    let base = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0);
    match cap {
        Some(c) => base.min(c),
        None => base,
    }.max(1)
}

/// Sum in a fixed binary tree over the slice positions.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let ss = pairwise_sum(&dev);
    if ss == 0.0 {
        return (mean, 0.0);
    }
    if v.len() < 2 {
        return (mean, f64::INFINITY);
    }
    (mean, (ss / (n - 1.0) / n).sqrt())
}

struct UnitResult {
    /// `exp(-<u, X_T>)` per requested `u`, averaged over the unit's paths.
    values: Vec<Complex64>,
    m_counts: Vec<u64>,
    mu_counts: Vec<u64>,
    mu_compensator: Vec<f64>,
}

struct Plan<'a> {
    seed: u64,
    x0: &'a SymMatrix,
    us: Vec<(Vec<f64>, Vec<f64>)>,
    n_steps: usize,
    paths_per_unit: usize,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn run_unit(plan: &Plan<'_>, stepper: &mut Stepper, unit: usize) -> Result<UnitResult> {
    let mut out = UnitResult {
        values: vec![Complex64::new(0.0, 0.0); plan.us.len()],
        m_counts: vec![0; stepper.m_counts.len()],
        mu_counts: vec![0; stepper.mu_counts.len()],
        mu_compensator: vec![0.0; stepper.mu_compensator.len()],
    };
    for member in 0..plan.paths_per_unit {
        let path = (unit * plan.paths_per_unit + member) as u64;
        // even streams carry Gaussian increments (shared within an antithetic pair), odd ones jumps
        let mut normals = stream(plan.seed, 2 * unit as u64);
        let mut jumps = stream(plan.seed, 2 * path + 1);
        let sign = if member % 2 == 0 { 1.0 } else { -1.0 };
        stepper.reset(plan.x0)?;
        for _ in 0..plan.n_steps {
            stepper.step(&mut normals, &mut jumps, sign)?;
        }
        for (k, (re, im)) in plan.us.iter().enumerate() {
            let dr: f64 = re.iter().zip(&stepper.x).map(|(a, b)| a * b).sum();
            let di: f64 = im.iter().zip(&stepper.x).map(|(a, b)| a * b).sum();
            out.values[k] += Complex64::new(-dr, -di).exp();
        }
        for (acc, c) in out.m_counts.iter_mut().zip(&stepper.m_counts) {
            *acc += c;
        }
        for (acc, c) in out.mu_counts.iter_mut().zip(&stepper.mu_counts) {
            *acc += c;
        }
        for (acc, c) in out.mu_compensator.iter_mut().zip(&stepper.mu_compensator) {
            *acc += c;
        }
    }
    let k = plan.paths_per_unit as f64;
    for v in out.values.iter_mut() {
        *v /= k;
    }
    Ok(out)
}

/// Simulates `cfg.n_paths` paths from `x` to `t` and estimates
/// `E exp(-<u, X_t>)` for every `u` in `us` from the same paths.
pub fn simulate(params: &AffineParams, us: &[CSymMatrix], x: &SymMatrix, t: f64, cfg: &SimConfig) -> Result<Simulation> {
    cfg.check()?;
    check_inputs(params, x)?;
    for u in us {
        if u.dim() != params.d {
            return Err(Error::DimensionMismatch { expected: params.d, got: u.dim() });
        }
        if !u.re.is_psd(PSD_TOL) {
            return Err(Error::Domain("real part of u must be positive semidefinite".into()));
        }
    }
    let (n_steps, dt) = step_grid(t, cfg.dt)?;
    let factor = diffusion_factor(&params.alpha)?;
    let paths_per_unit = if cfg.antithetic { 2 } else { 1 };
    let n_units = cfg.n_paths / paths_per_unit;
    let plan = Plan {
        seed: cfg.seed,
        x0: x,
        us: us.iter().map(|u| (u.re.as_mat().as_slice().to_vec(), u.im.as_mat().as_slice().to_vec())).collect(),
        n_steps,
        paths_per_unit,
    };
    // dt only matters when there are steps to take
    let stepper_dt = if n_steps == 0 { 1.0 } else { dt };
    Stepper::new(params, &factor, stepper_dt)?;

    let work = || -> Result<Vec<UnitResult>> {
        (0..n_units)
            .into_par_iter()
            .map_init(
                || Stepper::new(params, &factor, stepper_dt).expect("validated above"),
                |stepper, unit| run_unit(&plan, stepper, unit),
            )
            .collect()
    };
    let workers = worker_count(cfg.threads);
    let units = if workers == 1 {
        let mut stepper = Stepper::new(params, &factor, stepper_dt)?;
        (0..n_units).map(|unit| run_unit(&plan, &mut stepper, unit)).collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        pool.install(work)?
    };

    let estimates = (0..us.len())
        .map(|k| {
            let re: Vec<f64> = units.iter().map(|u| u.values[k].re).collect();
            let im: Vec<f64> = units.iter().map(|u| u.values[k].im).collect();
            let (mr, sr) = mean_and_stderr(&re);
            let (mi, si) = mean_and_stderr(&im);
            MCEstimate { mean: Complex64::new(mr, mi), stderr: sr.max(si), n_paths: cfg.n_paths, dt }
        })
        .collect();

    let n_paths = cfg.n_paths as f64;
    let mut jumps = Vec::new();
    for (k, atom) in params.m.atoms.iter().enumerate() {
        let realized = units.iter().map(|u| u.m_counts[k]).sum();
        jumps.push(jump_check("m", k, realized, atom.weight * dt * n_steps as f64 * n_paths));
    }
    for k in 0..params.mu.atoms.len() {
        let realized = units.iter().map(|u| u.mu_counts[k]).sum();
        let comp: Vec<f64> = units.iter().map(|u| u.mu_compensator[k]).collect();
        jumps.push(jump_check("mu", k, realized, pairwise_sum(&comp)));
    }
    Ok(Simulation { estimates, jumps, n_steps, dt })
}

fn jump_check(measure: &'static str, atom: usize, realized: u64, compensator: f64) -> JumpCheck {
    let diff = realized as f64 - compensator;
    let z = if compensator > 0.0 {
        diff / compensator.sqrt()
    } else if realized == 0 {
        0.0
    } else {
        f64::INFINITY
    };
    JumpCheck { measure, atom, realized, compensator, z }
}

/// Monte Carlo estimate of `E exp(-<u0, X_t>)` started from `x`.
pub fn estimate_transform(params: &AffineParams, u0: &CSymMatrix, x: &SymMatrix, t: f64, cfg: &SimConfig) -> Result<MCEstimate> {
    Ok(simulate(params, std::slice::from_ref(u0), x, t, cfg)?.estimates[0])
}

/// Monte Carlo estimate of `E exp(-i <w, X_t>)`.
pub fn estimate_char_function(params: &AffineParams, w: &SymMatrix, x: &SymMatrix, t: f64, cfg: &SimConfig) -> Result<MCEstimate> {
    estimate_transform(params, &CSymMatrix::from_imag(w.clone()), x, t, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MatrixAtom, ScalarAtom};
    use rand::Rng;

    fn wishart() -> AffineParams {
        AffineParams::wishart(SymMatrix::identity(2), Mat::identity(2).scale(-0.5), 1.0).unwrap()
    }

    fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
        let a = Mat::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::symmetrize(&a.matmul(&a.transpose()))
    }

    #[test]
    fn diffusion_factor_examples() {
        let f = diffusion_factor(&SymMatrix::identity(3)).unwrap();
        assert!(f.residual(&SymMatrix::identity(3)) < 1e-14);
        let f = diffusion_factor(&SymMatrix::zeros(2)).unwrap();
        assert_eq!(f.sigma.frobenius_norm(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_psd(&mut rng, 3);
            assert!(diffusion_factor(&a).unwrap().residual(&a) <= 1e-12 * (1.0 + a.frobenius_norm()));
        }
        let bad = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(diffusion_factor(&bad), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn step_trivial_dynamics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zero = AffineParams::wishart(SymMatrix::zeros(2), Mat::zeros(2), 0.0).unwrap();
        let x = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let y = step(&zero, &x, 0.1, &mut rng).unwrap();
        assert!(y.sub(&x).frobenius_norm() < 1e-14);

        let mut drift = zero.clone();
        drift.b = SymMatrix::identity(2).scale(3.0);
        let y = step(&drift, &x, 0.1, &mut rng).unwrap();
        assert!(y.sub(&x.add(&drift.b.scale(0.1))).frobenius_norm() < 1e-14);
    }

    #[test]
    fn step_rejects_killing() {
        let mut p = wishart();
        p.c = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(step(&p, &SymMatrix::identity(2), 0.1, &mut rng), Err(Error::NonConservative(_))));
        assert!(matches!(
            estimate_transform(&p, &CSymMatrix::zeros(2), &SymMatrix::identity(2), 1.0, &SimConfig::new(4, 0.1, 0)),
            Err(Error::NonConservative(_))
        ));
    }

    #[test]
    fn poisson_jump_frequency() {
        // jumps of size I at rate w: after one step X' = X + N I with N ~ Poisson(w dt)
        let lambda = 0.3;
        let p = AffineParams::wishart(SymMatrix::zeros(2), Mat::zeros(2), 0.0)
            .unwrap()
            .with_m(vec![ScalarAtom { xi: SymMatrix::identity(2), weight: lambda }])
            .unwrap();
        let factor = diffusion_factor(&p.alpha).unwrap();
        let mut stepper = Stepper::new(&p, &factor, 1.0).unwrap();
        stepper.reset(&SymMatrix::zeros(2)).unwrap();
        let mut normals = stream(9, 0);
        let mut jumps = stream(9, 1);
        let steps = 1_000_000;
        for _ in 0..steps {
            stepper.step(&mut normals, &mut jumps, 1.0).unwrap();
        }
        let count = stepper.m_counts[0] as f64;
        let mean = lambda * steps as f64;
        assert!((count - mean).abs() <= 4.0 * mean.sqrt(), "{count} vs {mean}");
        assert_eq!(stepper.x[0], count);
    }

    #[test]
    fn zero_u_is_exactly_one() {
        let e = estimate_transform(&wishart(), &CSymMatrix::zeros(2), &SymMatrix::identity(2), 1.0, &SimConfig::new(50, 0.1, 4)).unwrap();
        assert_eq!(e.mean, Complex64::new(1.0, 0.0));
        assert_eq!(e.stderr, 0.0);
        let w = estimate_char_function(&wishart(), &SymMatrix::zeros(2), &SymMatrix::identity(2), 1.0, &SimConfig::new(3, 0.5, 4)).unwrap();
        assert_eq!(w.mean, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn no_dynamics_short_horizon() {
        let zero = AffineParams::wishart(SymMatrix::zeros(2), Mat::zeros(2), 0.0).unwrap();
        let u = CSymMatrix::new(SymMatrix::identity(2), SymMatrix::from_diag(&[1.0, -2.0])).unwrap();
        let x = SymMatrix::from_diag(&[0.5, 1.5]);
        let e = estimate_transform(&zero, &u, &x, 1e-3, &SimConfig::new(5, 1e-3, 0)).unwrap();
        let expected = (-u.dot_real(&x)).exp();
        assert!((e.mean - expected).norm() < 1e-14);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let p = wishart().with_m(vec![ScalarAtom { xi: SymMatrix::identity(2).scale(0.2), weight: 0.5 }]).unwrap();
        let u = CSymMatrix::new(SymMatrix::identity(2), SymMatrix::identity(2)).unwrap();
        let x = SymMatrix::identity(2);
        let mut cfg = SimConfig::new(64, 1.0 / 16.0, 11);
        cfg.threads = Some(1);
        let a = estimate_transform(&p, &u, &x, 1.0, &cfg).unwrap();
        let b = estimate_transform(&p, &u, &x, 1.0, &cfg).unwrap();
        cfg.threads = Some(3);
        let c = estimate_transform(&p, &u, &x, 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        cfg.seed = 12;
        assert_ne!(a, estimate_transform(&p, &u, &x, 1.0, &cfg).unwrap());
    }

    #[test]
    fn conjugate_symmetry() {
        let w = SymMatrix::from_rows(&[vec![0.7, -0.2], vec![-0.2, 0.4]]).unwrap();
        let cfg = SimConfig::new(200, 1.0 / 32.0, 5);
        let x = SymMatrix::identity(2);
        let plus = estimate_char_function(&wishart(), &w, &x, 1.0, &cfg).unwrap();
        let minus = estimate_char_function(&wishart(), &w.scale(-1.0), &x, 1.0, &cfg).unwrap();
        assert!((plus.mean - minus.mean.conj()).norm() < 1e-15);
        assert!(plus.mean.norm() <= 1.0 + 3.0 * plus.stderr);
    }

    #[test]
    fn antithetic_pairs() {
        let mut cfg = SimConfig::new(7, 0.1, 0);
        cfg.antithetic = true;
        assert!(cfg.check().is_err());
        cfg.n_paths = 400;
        let e = estimate_transform(&wishart(), &CSymMatrix::from_real(SymMatrix::identity(2)), &SymMatrix::identity(2), 1.0, &cfg).unwrap();
        assert!(e.stderr > 0.0 && e.mean.re > 0.0 && e.mean.re < 1.0);
        assert_eq!(e.n_paths, 400);
    }

    #[test]
    fn wishart_against_closed_form() {
        let p = wishart();
        let u = CSymMatrix::from_real(SymMatrix::identity(2));
        let x = SymMatrix::identity(2);
        let exact = crate::closedform::wishart_transform(&crate::closedform::MBAJDSpec::from_params(&p).unwrap(), &u, &x, 1.0).unwrap();
        let e = estimate_transform(&p, &u, &x, 1.0, &SimConfig::new(4000, 1.0 / 64.0, 2)).unwrap();
        assert!((e.mean - exact).norm() <= 3.0 * e.stderr + 0.01, "{e:?} vs {exact}");
    }

    #[test]
    fn jump_compensator_matches() {
        let p = wishart()
            .with_m(vec![ScalarAtom { xi: SymMatrix::identity(2).scale(0.3), weight: 0.8 }])
            .unwrap()
            .with_mu(vec![MatrixAtom { xi: SymMatrix::from_diag(&[0.2, 0.0]), weight_matrix: SymMatrix::identity(2).scale(0.5) }])
            .unwrap();
        let sim = simulate(&p, &[], &SymMatrix::identity(2), 1.0, &SimConfig::new(500, 1.0 / 64.0, 8)).unwrap();
        assert_eq!(sim.jumps.len(), 2);
        for j in &sim.jumps {
            assert!(j.compensator > 100.0 && j.z.abs() <= 4.0, "{j:?}");
        }
    }

    #[test]
    fn step_grid_rounds_down() {
        assert_eq!(step_grid(1.0, 0.25).unwrap(), (4, 0.25));
        let (n, dt) = step_grid(1.0, 0.3).unwrap();
        assert_eq!(n, 4);
        assert_eq!(dt, 0.25);
        assert_eq!(step_grid(0.0, 0.1).unwrap(), (0, 0.0));
        assert!(step_grid(0.1, 0.2).is_err());
    }

    #[test]
    fn pairwise_statistics() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let (m, s) = mean_and_stderr(&v);
        assert_eq!(m, 49.5);
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 99.0;
        assert!((s - (var / 100.0).sqrt()).abs() < 1e-12);
    }
}
