use num_complex::Complex64;
use serde::Serialize;

use super::dopri::{self, DenseSegment, DopriOptions, DopriStatus};
use super::rhs::{RiccatiRhs, RiccatiSystem};
use crate::error::{Error, Result};
use crate::model::{AffineParams, AlphaClass};
use crate::symcore::{riccati_quadratic_real, CSymMatrix, SymMatrix, PSD_TOL};

/// Tolerances and thresholds of the Riccati integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// `||psi||` above which the solution is declared to blow up.
    pub blowup_norm: f64,
    /// Floor on `lambda_min(Re psi)` when `Re u0` is positive definite.
    pub boundary_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { rel_tol: 1e-9, abs_tol: 1e-11, max_step: f64::INFINITY, blowup_norm: 1e8, boundary_floor: -1e-8 }
    }
}

impl SolverConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        SolverConfig { rel_tol, abs_tol, ..Default::default() }
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.blowup_norm > 1.0
            && self.boundary_floor.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid solver configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub min_lambda_re_psi: f64,
    pub max_psi_norm: f64,
    /// Last accepted time when the run ended before `T`, infinite otherwise.
    pub t_plus_estimate: f64,
    /// The run ended because the step size underflowed.
    pub step_underflow: bool,
    pub growth_constant: f64,
    /// `max_t ||psi(t)|| / (exp(C t) sqrt(1 + ||u0||^2))` over accepted steps.
    pub gronwall_max_ratio: f64,
    /// Smallest `Re tr(conj(psi) psi alpha psi)` seen; tracked for degenerate alpha only.
    pub quadratic_monitor_min: Option<f64>,
    pub outside_proved_regime: bool,
    pub boundary_floor_breached: bool,
    pub warnings: Vec<String>,
}

/// Trajectory of `(phi, psi)` on the accepted step grid with dense output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiSolution {
    pub d: usize,
    pub projected: bool,
    pub times: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub psi: Vec<CSymMatrix>,
    #[serde(skip)]
    pub segments: Vec<DenseSegment>,
    /// Whether the run reached the requested horizon.
    pub completed: bool,
    pub diagnostics: Diagnostics,
}

impl RiccatiSolution {
    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("solution holds t = 0")
    }

    pub fn phi_end(&self) -> Complex64 {
        *self.phi.last().expect("solution holds t = 0")
    }

    pub fn psi_end(&self) -> &CSymMatrix {
        self.psi.last().expect("solution holds t = 0")
    }

    /// `(phi(t), psi(t))` from the dense output.
    pub fn eval(&self, t: f64) -> Result<(Complex64, CSymMatrix)> {
        if !(t >= 0.0 && t <= self.t_end()) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.t_end())));
        }
        if t == 0.0 {
            return Ok((self.phi[0], self.psi[0].clone()));
        }
        let k = self.segments.partition_point(|s| s.t1() < t).min(self.segments.len() - 1);
        Ok(unpack(self.d, &self.segments[k].eval(t)))
    }

    /// `exp(-phi(T) - <psi(T), x>)`.
    pub fn transform_end(&self, x: &SymMatrix) -> Complex64 {
        (-self.phi_end() - self.psi_end().dot_real(x)).exp()
    }

    fn into_result(self) -> Result<RiccatiSolution> {
        if self.completed {
            return Ok(self);
        }
        let t = self.diagnostics.t_plus_estimate;
        if self.diagnostics.step_underflow {
            Err(Error::StepUnderflow { t })
        } else {
            Err(Error::BlowUp { t_plus: t })
        }
    }
}

fn upper_len(d: usize) -> usize {
    d * (d + 1) / 2
}

pub(crate) fn pack(phi: Complex64, psi: &CSymMatrix) -> Vec<f64> {
    let d = psi.dim();
    let mut y = Vec::with_capacity(2 * upper_len(d) + 2);
    for part in [&psi.re, &psi.im] {
        for i in 0..d {
            for j in i..d {
                y.push(part.get(i, j));
            }
        }
    }
    y.push(phi.re);
    y.push(phi.im);
    y
}

pub(crate) fn unpack(d: usize, y: &[f64]) -> (Complex64, CSymMatrix) {
    let n = upper_len(d);
    let part = |off: usize| {
        let mut k = off;
        SymMatrix::from_upper_fn(d, |_, _| {
            k += 1;
            y[k - 1]
        })
    };
    (Complex64::new(y[2 * n], y[2 * n + 1]), CSymMatrix { re: part(0), im: part(n) })
}

/// Integrates any Riccati system from `(0, u0)` up to `t_end`. A blow-up or
/// step-size underflow ends the run early with `completed = false` and
/// `t_plus_estimate` set; the partial trajectory is kept.
pub fn integrate<S: RiccatiSystem>(sys: &S, u0: &CSymMatrix, t_end: f64, cfg: &SolverConfig) -> Result<RiccatiSolution> {
    cfg.check()?;
    let d = sys.dim();
    if u0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: u0.dim() });
    }
    if !u0.is_finite() || !t_end.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(t_end > 0.0) {
        return Err(Error::Domain(format!("horizon T must be positive, got {t_end}")));
    }
    if !u0.re.is_psd(PSD_TOL) {
        return Err(Error::Domain("real part of u0 must be positive semidefinite".into()));
    }

    let alpha = sys.alpha().clone();
    let alpha_class = AlphaClass::of(&alpha, PSD_TOL)?;
    let interior_start = u0.re.is_positive_definite(PSD_TOL);
    let c = sys.growth_constant()?;
    let u_scale = (1.0 + u0.frobenius_norm().powi(2)).sqrt();
    let mut warnings = Vec::new();
    if alpha_class == AlphaClass::DegenerateNonzero {
        let msg = "alpha is degenerate but nonzero: global existence is conjectured, not proved; monitoring the quadratic term";
        log::warn!("{msg}");
        warnings.push(msg.to_string());
    }

    let mut times = vec![0.0];
    let mut phis = vec![Complex64::new(0.0, 0.0)];
    let mut psis = vec![u0.clone()];
    let mut segments = Vec::new();
    let mut min_lambda = u0.re.min_eigenvalue()?;
    let mut max_norm = u0.frobenius_norm();
    let mut gronwall_max_ratio = u0.frobenius_norm() / u_scale;
    let mut quad_min: Option<f64> = None;
    if alpha_class == AlphaClass::DegenerateNonzero {
        quad_min = Some(riccati_quadratic_real(u0, &alpha)?);
    }
    let mut blew_up = false;
    let mut monitor_err: Option<Error> = None;

    let opts = DopriOptions { rtol: cfg.rel_tol, atol: cfg.abs_tol, max_step: cfg.max_step };
    let y0 = pack(Complex64::new(0.0, 0.0), u0);
    let run = dopri::integrate(
        |_, y, dy| {
            let (_, psi) = unpack(d, y);
            let (f, r) = sys.eval(&psi)?;
            dy.copy_from_slice(&pack(f, &r));
            Ok(())
        },
        0.0,
        &y0,
        t_end,
        &opts,
        |t, y, seg| {
            let (phi, psi) = unpack(d, y);
            let norm = psi.frobenius_norm();
            if !norm.is_finite() || norm > cfg.blowup_norm {
                blew_up = true;
                return false;
            }
            max_norm = max_norm.max(norm);
            gronwall_max_ratio = gronwall_max_ratio.max(norm / ((c * t).exp() * u_scale));
            match psi.re.min_eigenvalue() {
                Ok(l) => min_lambda = min_lambda.min(l),
                Err(e) => {
                    monitor_err = Some(e);
                    return false;
                }
            }
            if let Some(q) = quad_min.as_mut() {
                match riccati_quadratic_real(&psi, &alpha) {
                    Ok(v) => *q = q.min(v),
                    Err(e) => {
                        monitor_err = Some(e);
                        return false;
                    }
                }
            }
            times.push(t);
            phis.push(phi);
            psis.push(psi);
            segments.push(seg);
            true
        },
    )?;
    if let Some(e) = monitor_err {
        return Err(e);
    }

    let completed = run.status == DopriStatus::Completed;
    let t_plus_estimate = if completed { f64::INFINITY } else { *times.last().unwrap() };
    if blew_up {
        warnings.push(format!("||psi|| exceeded {:e} after t = {t_plus_estimate}", cfg.blowup_norm));
    } else if run.status == DopriStatus::StepUnderflow {
        warnings.push(format!("step size underflow at t = {t_plus_estimate}"));
    }

    let mut outside_proved_regime = false;
    if let Some(q) = quad_min {
        let scale = max_norm.powi(3) * alpha.frobenius_norm();
        if q < -1e-12 * scale.max(1.0) {
            outside_proved_regime = true;
            warnings.push(format!("outside proved regime: Re tr(conj(psi) psi alpha psi) reached {q:e}"));
        }
    }
    let boundary_floor_breached = interior_start && alpha_class.is_proved_regime() && min_lambda <= cfg.boundary_floor;
    if boundary_floor_breached {
        warnings.push(format!("lambda_min(Re psi) fell to {min_lambda:e}, below the floor {:e}", cfg.boundary_floor));
    }

    let diagnostics = Diagnostics {
        accepted_steps: run.accepted,
        rejected_steps: run.rejected,
        min_lambda_re_psi: min_lambda,
        max_psi_norm: max_norm,
        t_plus_estimate,
        step_underflow: run.status == DopriStatus::StepUnderflow,
        growth_constant: c,
        gronwall_max_ratio,
        quadratic_monitor_min: quad_min,
        outside_proved_regime,
        boundary_floor_breached,
        warnings,
    };
    Ok(RiccatiSolution {
        d,
        projected: sys.projected(),
        times,
        phi: phis,
        psi: psis,
        segments,
        completed,
        diagnostics,
    })
}

/// Solves the Riccati equations from `psi(0) = u0` on `[0, T]`. When `Re u0`
/// is singular the projected system is used.
pub fn solve(params: &AffineParams, u0: &CSymMatrix, t: f64, cfg: &SolverConfig) -> Result<RiccatiSolution> {
    let projected = !u0.re.is_positive_definite(PSD_TOL);
    integrate(&RiccatiRhs { params, projected }, u0, t, cfg)?.into_result()
}

/// Solves the projected system, for `Re u0` on the boundary of the cone.
pub fn solve_boundary(params: &AffineParams, u0: &CSymMatrix, t: f64, cfg: &SolverConfig) -> Result<RiccatiSolution> {
    integrate(&RiccatiRhs::projected(params), u0, t, cfg)?.into_result()
}

/// `E[exp(-<u0, X_T>) | X_0 = x] = exp(-phi(T, u0) - <psi(T, u0), x>)`.
pub fn transform(params: &AffineParams, u0: &CSymMatrix, x: &SymMatrix, t: f64, cfg: &SolverConfig) -> Result<Complex64> {
    Ok(transform_with_solution(params, u0, x, t, cfg)?.0)
}

/// Like [`transform`] but also returns the trajectory (`None` at `T = 0`).
pub fn transform_with_solution(
    params: &AffineParams,
    u0: &CSymMatrix,
    x: &SymMatrix,
    t: f64,
    cfg: &SolverConfig,
) -> Result<(Complex64, Option<RiccatiSolution>)> {
    if x.dim() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: x.dim() });
    }
    if !x.is_psd(PSD_TOL) {
        return Err(Error::Domain("state x must be positive semidefinite".into()));
    }
    if t == 0.0 {
        if !u0.re.is_psd(PSD_TOL) {
            return Err(Error::Domain("real part of u0 must be positive semidefinite".into()));
        }
        return Ok(((-u0.dot_real(x)).exp(), None));
    }
    let sol = if u0.re.is_positive_definite(PSD_TOL) {
        solve(params, u0, t, cfg)?
    } else {
        solve_boundary(params, u0, t, cfg)?
    };
    Ok((sol.transform_end(x), Some(sol)))
}

/// Characteristic function `E[exp(-i <w, X_T>)]`.
pub fn characteristic_function(
    params: &AffineParams,
    w: &SymMatrix,
    x: &SymMatrix,
    t: f64,
    cfg: &SolverConfig,
) -> Result<Complex64> {
    transform(params, &CSymMatrix::from_imag(w.clone()), x, t, cfg)
}

/// Generator applied to `f(x) = exp(-<u, x>)`:
/// `(-F(u) - <R(u), x>) exp(-<u, x>)`.
pub fn generator_exp(params: &AffineParams, u: &CSymMatrix, x: &SymMatrix) -> Result<Complex64> {
    if x.dim() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: x.dim() });
    }
    if !x.is_psd(PSD_TOL) {
        return Err(Error::Domain("state x must be positive semidefinite".into()));
    }
    let rhs = RiccatiRhs::new(params);
    let f = rhs.phi(u)?;
    let r = rhs.psi(u)?;
    Ok((-f - r.dot_real(x)) * (-u.dot_real(x)).exp())
}
