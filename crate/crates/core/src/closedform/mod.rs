//! Semi-explicit transforms of Wishart processes with state-independent jumps.

mod quad;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{AffineParams, AtomicMeasure, LinearDrift, MatrixAtomicMeasure};
use crate::symcore::{mat_exp, CMat, CSymMatrix, Mat, SymMatrix, PSD_TOL};

pub(crate) use quad::adaptive_simpson;

/// Absolute tolerance of the quadrature witness for `sigma`.
pub const SIGMA_QUAD_TOL: f64 = 1e-11;
/// Largest accepted discrepancy between the two `sigma` computations,
/// relative to `max(1, ||sigma||)`.
pub const SIGMA_CROSS_TOL: f64 = 1e-8;
/// Condition number of `I + u sigma` above which `psi` is refused.
pub const MAX_CONDITION: f64 = 1e12;
/// Absolute tolerance of the time integral of the jump term in `phi`.
pub const JUMP_QUAD_TOL: f64 = 1e-12;
/// Largest accepted argument increment of `det(I + u sigma_s)` between grid points.
const MAX_ARG_STEP: f64 = std::f64::consts::FRAC_PI_4;
const MIN_BRANCH_GRID: usize = 32;
const MAX_BRANCH_GRID: usize = 1 << 16;
/// Residual allowed in the fit `b = 2 p alpha`.
pub const P_FIT_TOL: f64 = 1e-10;

/// Wishart dynamics `b = 2 p alpha`, `B(x) = beta x + x beta^T`, plus
/// state-independent jumps `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MBAJDSpec {
    pub d: usize,
    pub alpha: SymMatrix,
    pub beta: Mat,
    pub p: f64,
    pub m: AtomicMeasure,
}

impl MBAJDSpec {
    pub fn new(alpha: SymMatrix, beta: Mat, p: f64, m: AtomicMeasure) -> Result<Self> {
        let d = alpha.dim();
        if beta.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: beta.dim() });
        }
        if !alpha.is_psd(PSD_TOL) {
            return Err(Error::InvalidParams("alpha must be positive semidefinite".into()));
        }
        let p_min = (d as f64 - 1.0) / 2.0;
        if !(p >= p_min) {
            return Err(Error::InvalidParams(format!("p must be at least (d-1)/2 = {p_min}, got {p}")));
        }
        m.check(d)?;
        Ok(MBAJDSpec { d, alpha, beta, p, m })
    }

    /// Recognizes the MBAJD shape in a parameter set: `c = 0`, `gamma = 0`,
    /// no `mu`, Lyapunov drift and `b = 2 p alpha` by least squares.
    pub fn from_params(params: &AffineParams) -> Result<Self> {
        let not = |why: &str| Err(Error::InvalidParams(format!("not an MBAJD parameter set: {why}")));
        if params.c != 0.0 || params.gamma.frobenius_norm() != 0.0 {
            return not("killing (c, gamma) must vanish");
        }
        if !params.mu.is_empty() {
            return not("mu must be empty");
        }
        let Some(beta) = params.drift.as_lyapunov_beta() else {
            return not("drift must be of Lyapunov type");
        };
        let a2 = params.alpha.scale(2.0);
        let norm2 = a2.dot(&a2);
        let p = if norm2 == 0.0 { (params.d as f64 - 1.0) / 2.0 } else { params.b.dot(&a2) / norm2 };
        let residual = params.b.sub(&a2.scale(p)).frobenius_norm();
        if residual > P_FIT_TOL * params.b.frobenius_norm().max(1.0) {
            return not(&format!("b is not a multiple of 2 alpha (residual {residual:e})"));
        }
        MBAJDSpec::new(params.alpha.clone(), beta.clone(), p, params.m.clone())
    }

    pub fn to_params(&self) -> Result<AffineParams> {
        AffineParams::new(
            self.alpha.clone(),
            self.alpha.scale(2.0 * self.p),
            LinearDrift::lyapunov(self.beta.clone()),
            0.0,
            SymMatrix::zeros(self.d),
            self.m.clone(),
            MatrixAtomicMeasure::empty(),
        )
    }
}

/// `omega_t(x) = exp(beta t) x exp(beta^T t)`.
pub fn flow_omega(beta: &Mat, x: &SymMatrix, t: f64) -> Result<SymMatrix> {
    if beta.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: beta.dim() });
    }
    Ok(x.congruence(&mat_exp(&beta.scale(t))?))
}

/// Van Loan: the upper-right block of `exp([[beta, 2 alpha], [0, -beta^T]] t)`
/// is `F12 = int_0^t exp(beta (t-s)) 2 alpha exp(-beta^T s) ds`, and
/// `sigma_t = F12 exp(beta^T t)` with `exp(beta t)` the upper-left block.
/// Returns `(sigma_t, exp(beta t))`.
pub(crate) fn sigma_van_loan(beta: &Mat, alpha: &SymMatrix, t: f64) -> Result<(SymMatrix, Mat)> {
    let d = beta.dim();
    let mut block = Mat::zeros(2 * d);
    for i in 0..d {
        for j in 0..d {
            block[(i, j)] = beta[(i, j)] * t;
            block[(i, d + j)] = 2.0 * alpha.get(i, j) * t;
            block[(d + i, d + j)] = -beta[(j, i)] * t;
        }
    }
    let e = mat_exp(&block)?;
    let f11 = e.block(0, 0, d);
    let f12 = e.block(0, d, d);
    Ok((SymMatrix::symmetrize(&f12.matmul(&f11.transpose())), f11))
}

/// `2 int_0^t omega_s(alpha) ds` by adaptive Simpson quadrature.
pub fn sigma_quadrature(beta: &Mat, alpha: &SymMatrix, t: f64) -> Result<SymMatrix> {
    let d = alpha.dim();
    let v = adaptive_simpson(|s| Ok(flow_omega(beta, alpha, s)?.scale(2.0).svec()), 0.0, t, SIGMA_QUAD_TOL)?;
    SymMatrix::from_svec(d, &v)
}

/// `sigma_t(alpha) = 2 int_0^t exp(beta s) alpha exp(beta^T s) ds`, computed
/// by a block exponential and checked against quadrature.
pub fn sigma_integral(beta: &Mat, alpha: &SymMatrix, t: f64) -> Result<SymMatrix> {
    if beta.dim() != alpha.dim() {
        return Err(Error::DimensionMismatch { expected: alpha.dim(), got: beta.dim() });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be non-negative, got {t}")));
    }
    let (fast, _) = sigma_van_loan(beta, alpha, t)?;
    let slow = sigma_quadrature(beta, alpha, t)?;
    let gap = fast.sub(&slow).frobenius_norm();
    if gap > SIGMA_CROSS_TOL * fast.frobenius_norm().max(1.0) {
        return Err(Error::CrossCheck(format!(
            "sigma by block exponential and by quadrature differ by {gap:e} at t = {t}"
        )));
    }
    Ok(fast)
}

/// `exp(beta^T t) (I + u sigma)^{-1} u exp(beta t)` given `sigma_t` and `exp(beta t)`.
fn psi_from(u: &CSymMatrix, sigma: &SymMatrix, eb: &Mat) -> Result<CSymMatrix> {
    let d = u.dim();
    let uc = u.to_cmat();
    let a = CMat::identity(d).add(&uc.matmul(&CMat::from_real(sigma.as_mat())));
    let cond = a.condition_one();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Singular);
    }
    let x = a.solve(&uc)?;
    let ebc = CMat::from_real(eb);
    let psi = ebc.transpose().matmul(&x).matmul(&ebc);
    Ok(CSymMatrix::from_cmat_symmetrized(&psi))
}

fn check_u(spec: &MBAJDSpec, u: &CSymMatrix, t: f64) -> Result<()> {
    if u.dim() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: u.dim() });
    }
    if !u.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be non-negative, got {t}")));
    }
    Ok(())
}

/// `psi(t, u) = exp(beta^T t) (I + u sigma_t)^{-1} u exp(beta t)`, which equals
/// `exp(beta^T t) (u^{-1} + sigma_t)^{-1} exp(beta t)` for invertible `u`.
pub fn mbajd_psi(spec: &MBAJDSpec, u: &CSymMatrix, t: f64) -> Result<CSymMatrix> {
    check_u(spec, u, t)?;
    let sigma = sigma_integral(&spec.beta, &spec.alpha, t)?;
    let eb = mat_exp(&spec.beta.scale(t))?;
    psi_from(u, &sigma, &eb)
}

fn det_at(spec: &MBAJDSpec, uc: &CMat, s: f64) -> Result<Complex64> {
    let (sigma, _) = sigma_van_loan(&spec.beta, &spec.alpha, s)?;
    Ok(CMat::identity(spec.d).add(&uc.matmul(&CMat::from_real(sigma.as_mat()))).det())
}

/// Unwrapped argument of `det(I + u sigma_s)` at `s = t` on an `n`-point grid.
/// `None` if some grid step moves the argument by more than `MAX_ARG_STEP`.
fn unwrapped_arg(spec: &MBAJDSpec, uc: &CMat, t: f64, n: usize) -> Result<std::result::Result<(f64, Complex64), f64>> {
    let mut prev = Complex64::new(1.0, 0.0);
    let mut arg = 0.0;
    for k in 1..=n {
        let s = t * k as f64 / n as f64;
        let det = det_at(spec, uc, s)?;
        if det == Complex64::new(0.0, 0.0) || !det.is_finite() {
            return Err(Error::Singular);
        }
        let step = (det / prev).arg();
        if step.abs() > MAX_ARG_STEP {
            return Ok(Err(s));
        }
        arg += step;
        prev = det;
    }
    Ok(Ok((arg, prev)))
}

/// `log det(I + u sigma_t)` on the branch continuous in `t` from `log 1 = 0`.
pub fn log_det_tracked(spec: &MBAJDSpec, u: &CSymMatrix, t: f64) -> Result<Complex64> {
    check_u(spec, u, t)?;
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let uc = u.to_cmat();
    let mut n = MIN_BRANCH_GRID;
    loop {
        match unwrapped_arg(spec, &uc, t, n)? {
            Ok((arg, det)) => {
                // the refined grid must land on the same branch
                let Ok((arg2, _)) = unwrapped_arg(spec, &uc, t, 2 * n)? else {
                    return Err(Error::BranchAmbiguity { t });
                };
                if (arg2 - arg).abs() > std::f64::consts::PI {
                    return Err(Error::BranchAmbiguity { t });
                }
                return Ok(Complex64::new(det.norm().ln(), arg));
            }
            Err(s) => {
                if 2 * n > MAX_BRANCH_GRID {
                    return Err(Error::BranchAmbiguity { t: s });
                }
                n *= 2;
            }
        }
    }
}

/// `phi(t, u) = p log det(I + u sigma_t) - int_0^t sum_k w_k (exp(-<psi(s, u), xi_k>) - 1) ds`.
pub fn mbajd_phi(spec: &MBAJDSpec, u: &CSymMatrix, t: f64) -> Result<Complex64> {
    check_u(spec, u, t)?;
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // validates the sigma computation at the horizon
    sigma_integral(&spec.beta, &spec.alpha, t)?;
    let logdet = log_det_tracked(spec, u, t)?;
    let mut phi = logdet * spec.p;
    if !spec.m.is_empty() {
        let jump = adaptive_simpson(
            |s| {
                let (sigma, eb) = sigma_van_loan(&spec.beta, &spec.alpha, s)?;
                let psi = psi_from(u, &sigma, &eb)?;
                let v = -spec.m.transform_unchecked(&psi);
                Ok(vec![v.re, v.im])
            },
            0.0,
            t,
            JUMP_QUAD_TOL,
        )?;
        phi += Complex64::new(jump[0], jump[1]);
    }
    Ok(phi)
}

/// `exp(-phi(t, u) - <psi(t, u), x>)`.
pub fn mbajd_transform(spec: &MBAJDSpec, u: &CSymMatrix, x: &SymMatrix, t: f64) -> Result<Complex64> {
    if x.dim() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: x.dim() });
    }
    if !x.is_psd(PSD_TOL) {
        return Err(Error::Domain("state x must be positive semidefinite".into()));
    }
    if t == 0.0 {
        check_u(spec, u, t)?;
        return Ok((-u.dot_real(x)).exp());
    }
    let phi = mbajd_phi(spec, u, t)?;
    let psi = mbajd_psi(spec, u, t)?;
    Ok((-phi - psi.dot_real(x)).exp())
}

/// Transform of a jump-free MBAJD (a Wishart process).
pub fn wishart_transform(spec: &MBAJDSpec, u: &CSymMatrix, x: &SymMatrix, t: f64) -> Result<Complex64> {
    if !spec.m.is_empty() {
        return Err(Error::InvalidParams("the Wishart transform requires m to be empty".into()));
    }
    mbajd_transform(spec, u, x, t)
}
