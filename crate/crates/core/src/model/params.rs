use serde::{Deserialize, Serialize};

use super::drift::LinearDrift;
use super::measure::{truncation, AtomicMeasure, MatrixAtom, MatrixAtomicMeasure, ScalarAtom};
use crate::error::{Error, Result};
use crate::symcore::{Mat, SymMatrix, PSD_TOL};

/// Spectral class of the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaClass {
    Zero,
    Invertible,
    DegenerateNonzero,
}

impl AlphaClass {
    /// Classifies `alpha` by its spectrum with relative tolerance `tol`.
    pub fn of(alpha: &SymMatrix, tol: f64) -> Result<AlphaClass> {
        let ev = alpha.eigen()?.eigenvalues;
        let scale = alpha.frobenius_norm().max(1.0);
        if ev.iter().all(|l| l.abs() <= tol * scale) {
            Ok(AlphaClass::Zero)
        } else if ev[0] > tol * scale {
            Ok(AlphaClass::Invertible)
        } else {
            Ok(AlphaClass::DegenerateNonzero)
        }
    }

    /// Whether the a-priori bounds are proved for this class.
    pub fn is_proved_regime(self) -> bool {
        !matches!(self, AlphaClass::DegenerateNonzero)
    }
}

/// Parameter set `(alpha, b, B, c, gamma, m, mu)` in truncation-free form.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    pub d: usize,
    pub alpha: SymMatrix,
    pub b: SymMatrix,
    pub drift: LinearDrift,
    pub c: f64,
    pub gamma: SymMatrix,
    pub m: AtomicMeasure,
    pub mu: MatrixAtomicMeasure,
}

impl AffineParams {
    /// Checks dimensions and the structural validity of the jump atoms.
    /// Admissibility proper is checked by [`super::validate`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: SymMatrix,
        b: SymMatrix,
        drift: LinearDrift,
        c: f64,
        gamma: SymMatrix,
        m: AtomicMeasure,
        mu: MatrixAtomicMeasure,
    ) -> Result<Self> {
        let d = alpha.dim();
        if d < 2 {
            return Err(Error::InvalidParams(format!("dimension must be at least 2, got {d}")));
        }
        for (name, x) in [("b", &b), ("gamma", &gamma)] {
            if x.dim() != d {
                return Err(Error::InvalidParams(format!("{name} has dimension {} but d = {d}", x.dim())));
            }
        }
        drift.check_dim(d)?;
        if !c.is_finite() {
            return Err(Error::InvalidParams("c must be finite".into()));
        }
        m.check(d)?;
        mu.check(d)?;
        Ok(AffineParams { d, alpha, b, drift, c, gamma, m, mu })
    }

    /// Wishart parameters: `b = 2 p alpha`, `B(x) = beta x + x beta^T`, no
    /// jumps, no killing.
    pub fn wishart(alpha: SymMatrix, beta: Mat, p: f64) -> Result<Self> {
        let d = alpha.dim();
        let b = alpha.scale(2.0 * p);
        AffineParams::new(
            alpha,
            b,
            LinearDrift::lyapunov(beta),
            0.0,
            SymMatrix::zeros(d),
            AtomicMeasure::empty(),
            MatrixAtomicMeasure::empty(),
        )
    }

    pub fn with_m(mut self, atoms: Vec<ScalarAtom>) -> Result<Self> {
        self.m = AtomicMeasure::new(atoms);
        self.m.check(self.d)?;
        Ok(self)
    }

    pub fn with_mu(mut self, atoms: Vec<MatrixAtom>) -> Result<Self> {
        self.mu = MatrixAtomicMeasure::new(atoms);
        self.mu.check(self.d)?;
        Ok(self)
    }

    pub fn alpha_class(&self) -> Result<AlphaClass> {
        AlphaClass::of(&self.alpha, PSD_TOL)
    }

    /// No killing: `c = 0` and `gamma = 0`.
    pub fn is_conservative(&self) -> bool {
        self.c == 0.0 && self.gamma.frobenius_norm() == 0.0
    }

    pub fn require_conservative(&self) -> Result<()> {
        if self.is_conservative() {
            Ok(())
        } else {
            Err(Error::NonConservative(format!(
                "simulation requires c = 0 and gamma = 0 (got c = {}, ||gamma|| = {})",
                self.c,
                self.gamma.frobenius_norm()
            )))
        }
    }
}

/// Parameter set written with a truncation function: the drift `B~` is
/// compensated by `chi(xi) <mu(dxi), x>` inside the jump integral.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedParams {
    pub d: usize,
    pub alpha: SymMatrix,
    pub b: SymMatrix,
    pub drift_tilde: LinearDrift,
    pub c: f64,
    pub gamma: SymMatrix,
    pub m: AtomicMeasure,
    pub mu: MatrixAtomicMeasure,
}

impl TruncatedParams {
    /// `chi(xi) = xi min(1, 1/||xi||)`.
    pub fn chi(xi: &SymMatrix) -> SymMatrix {
        truncation(xi)
    }
}

/// Matrix, in the isometric basis, of `x -> sum_k <M_k, x> chi(xi_k)`.
fn compensator_matrix(mu: &MatrixAtomicMeasure, d: usize) -> Mat {
    let dd = crate::symcore::svec_len(d);
    let mut out = Mat::zeros(dd);
    for atom in &mu.atoms {
        let chi = truncation(&atom.xi).svec();
        let w = atom.weight_matrix.svec();
        for r in 0..dd {
            for c in 0..dd {
                out[(r, c)] += chi[r] * w[c];
            }
        }
    }
    out
}

/// Truncation-free drift `B(x) = B~(x) - sum_k <M_k, x> chi(xi_k)`.
pub fn detruncate(tp: &TruncatedParams) -> Result<AffineParams> {
    let drift = if tp.mu.is_empty() {
        tp.drift_tilde.clone()
    } else {
        let base = tp.drift_tilde.to_matrix(tp.d)?;
        LinearDrift::general(&base - &compensator_matrix(&tp.mu, tp.d))
    };
    AffineParams::new(tp.alpha.clone(), tp.b.clone(), drift, tp.c, tp.gamma.clone(), tp.m.clone(), tp.mu.clone())
}

/// Inverse of [`detruncate`]: `B~(x) = B(x) + sum_k <M_k, x> chi(xi_k)`.
pub fn truncate(params: &AffineParams) -> Result<TruncatedParams> {
    let drift_tilde = if params.mu.is_empty() {
        params.drift.clone()
    } else {
        let base = params.drift.to_matrix(params.d)?;
        LinearDrift::general(&base + &compensator_matrix(&params.mu, params.d))
    };
    Ok(TruncatedParams {
        d: params.d,
        alpha: params.alpha.clone(),
        b: params.b.clone(),
        drift_tilde,
        c: params.c,
        gamma: params.gamma.clone(),
        m: params.m.clone(),
        mu: params.mu.clone(),
    })
}

/// Constants of the a-priori bound `||psi(t,u)|| <= exp(C t) sqrt(1 + ||u||^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstant {
    /// `||B^T||` in the trace norm.
    pub adjoint_norm: f64,
    /// `sum_k (||xi_k|| ^ 1) tr(M_k)`.
    pub c1: f64,
    /// `2 sum_{||xi_k|| > 1} tr(M_k)`.
    pub c2: f64,
    pub gamma_norm: f64,
    /// `||B^T|| + C1 + (||gamma|| + C2) / 2`.
    pub c: f64,
}

/// Growth constant for the Gronwall bound.
///
/// Derivation: `d/dt ||psi||^2 <= 2 (||B^T|| + C1) ||psi||^2 + 2 (||gamma|| + C2) ||psi||`
/// and `2 ||psi|| <= 1 + ||psi||^2` give `d/dt ||psi||^2 <= 2 C (1 + ||psi||^2)`.
pub fn growth_constant(params: &AffineParams) -> Result<GrowthConstant> {
    let adjoint_norm = params.drift.adjoint_operator_norm(params.d)?;
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for a in &params.mu.atoms {
        let n = a.xi.frobenius_norm();
        let tr = a.weight_matrix.trace();
        c1 += n.min(1.0) * tr;
        if n > 1.0 {
            c2 += 2.0 * tr;
        }
    }
    let gamma_norm = params.gamma.frobenius_norm();
    Ok(GrowthConstant { adjoint_norm, c1, c2, gamma_norm, c: adjoint_norm + c1 + 0.5 * (gamma_norm + c2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params(d: usize) -> AffineParams {
        AffineParams::new(
            SymMatrix::zeros(d),
            SymMatrix::zeros(d),
            LinearDrift::zero(d),
            0.0,
            SymMatrix::zeros(d),
            AtomicMeasure::empty(),
            MatrixAtomicMeasure::empty(),
        )
        .unwrap()
    }

    #[test]
    fn alpha_classes() {
        assert_eq!(AlphaClass::of(&SymMatrix::zeros(2), 1e-10).unwrap(), AlphaClass::Zero);
        assert_eq!(AlphaClass::of(&SymMatrix::identity(2), 1e-10).unwrap(), AlphaClass::Invertible);
        assert_eq!(AlphaClass::of(&SymMatrix::from_diag(&[1.0, 0.0]), 1e-10).unwrap(), AlphaClass::DegenerateNonzero);
    }

    #[test]
    fn growth_constant_examples() {
        assert_eq!(growth_constant(&zero_params(2)).unwrap().c, 0.0);

        let mut p = zero_params(2);
        p.drift = LinearDrift::lyapunov(Mat::identity(2));
        assert!((growth_constant(&p).unwrap().c - 2.0).abs() < 1e-10);

        // ||xi|| = 2, tr M = 3
        let p = zero_params(2)
            .with_mu(vec![MatrixAtom {
                xi: SymMatrix::from_diag(&[2.0, 0.0]),
                weight_matrix: SymMatrix::from_diag(&[1.0, 2.0]),
            }])
            .unwrap();
        let g = growth_constant(&p).unwrap();
        assert_eq!((g.c1, g.c2, g.c), (3.0, 6.0, 6.0));
    }

    #[test]
    fn detruncate_empty_mu_keeps_drift() {
        let mut p = zero_params(2);
        p.drift = LinearDrift::lyapunov(Mat::identity(2));
        let tp = truncate(&p).unwrap();
        assert_eq!(detruncate(&tp).unwrap().drift, p.drift);
    }

    #[test]
    fn detruncate_small_atom() {
        let xi = SymMatrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap();
        let w = SymMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.5]]).unwrap();
        let tilde = LinearDrift::lyapunov(Mat::from_rows(&[vec![-1.0, 0.3], vec![0.0, -0.5]]).unwrap());
        let tp = TruncatedParams {
            d: 2,
            alpha: SymMatrix::identity(2),
            b: SymMatrix::identity(2),
            drift_tilde: tilde.clone(),
            c: 0.0,
            gamma: SymMatrix::zeros(2),
            m: AtomicMeasure::empty(),
            mu: MatrixAtomicMeasure::new(vec![MatrixAtom { xi: xi.clone(), weight_matrix: w.clone() }]),
        };
        let p = detruncate(&tp).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let c = SymMatrix::canonical(2, i, j);
            let expected = tilde.apply(&c).unwrap().sub(&xi.scale(w.dot(&c)));
            assert!(p.drift.apply(&c).unwrap().sub(&expected).frobenius_norm() < 1e-14);
        }
    }
}
