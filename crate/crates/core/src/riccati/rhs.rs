//! Right-hand sides `F` and `R` of the generalized Riccati equations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{growth_constant, AffineParams, TruncatedParams};
use crate::symcore::{CSymMatrix, SymMatrix, PSD_TOL};

/// A Riccati system `phi' = F(psi)`, `psi' = R(psi)`.
pub trait RiccatiSystem {
    fn dim(&self) -> usize;

    fn alpha(&self) -> &SymMatrix;

    /// Constant `C` of the bound `||psi(t)|| <= exp(C t) sqrt(1 + ||u||^2)`.
    fn growth_constant(&self) -> Result<f64>;

    /// Whether the jump exponent uses `pi(Re u) + i Im u`.
    fn projected(&self) -> bool;

    /// `(F(u), R(u))` without domain checks.
    fn eval(&self, u: &CSymMatrix) -> Result<(Complex64, CSymMatrix)>;
}

/// Riccati system of a truncation-free parameter set.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiRhs<'a> {
    pub params: &'a AffineParams,
    pub projected: bool,
}

impl<'a> RiccatiRhs<'a> {
    pub fn new(params: &'a AffineParams) -> Self {
        RiccatiRhs { params, projected: false }
    }

    pub fn projected(params: &'a AffineParams) -> Self {
        RiccatiRhs { params, projected: true }
    }

    fn check(&self, u: &CSymMatrix) -> Result<()> {
        if u.dim() != self.params.d {
            return Err(Error::DimensionMismatch { expected: self.params.d, got: u.dim() });
        }
        if !u.is_finite() {
            return Err(Error::NonFinite);
        }
        if !self.projected && !u.re.is_psd(PSD_TOL) {
            return Err(Error::Domain("real part of u must be positive semidefinite".into()));
        }
        Ok(())
    }

    /// `R(u) = -2 u alpha u + B^T(u) + gamma - sum_k (exp(-<u, xi_k>) - 1) M_k`.
    pub fn psi(&self, u: &CSymMatrix) -> Result<CSymMatrix> {
        self.check(u)?;
        Ok(self.eval(u)?.1)
    }

    /// `F(u) = <b, u> + c - sum_k w_k (exp(-<u, xi_k>) - 1)`.
    pub fn phi(&self, u: &CSymMatrix) -> Result<Complex64> {
        self.check(u)?;
        Ok(self.eval(u)?.0)
    }
}

fn exponent_arg(u: &CSymMatrix, projected: bool, has_jumps: bool) -> Result<Option<CSymMatrix>> {
    if projected && has_jumps {
        Ok(Some(u.project_real()?))
    } else {
        Ok(None)
    }
}

impl RiccatiSystem for RiccatiRhs<'_> {
    fn dim(&self) -> usize {
        self.params.d
    }

    fn alpha(&self) -> &SymMatrix {
        &self.params.alpha
    }

    fn growth_constant(&self) -> Result<f64> {
        Ok(growth_constant(self.params)?.c)
    }

    fn projected(&self) -> bool {
        self.projected
    }

    fn eval(&self, u: &CSymMatrix) -> Result<(Complex64, CSymMatrix)> {
        let p = self.params;
        let has_jumps = !(p.m.is_empty() && p.mu.is_empty());
        let projected = exponent_arg(u, self.projected, has_jumps)?;
        let e = projected.as_ref().unwrap_or(u);

        let mut psi = u.sandwich(&p.alpha).scale(-2.0).add(&p.drift.adjoint_complex_unchecked(u)).add_real(&p.gamma);
        psi = psi.sub(&p.mu.transform_unchecked(e));
        let phi = u.dot_real(&p.b) + p.c - p.m.transform_unchecked(e);
        Ok((phi, psi))
    }
}

/// Riccati system written with a truncation function:
/// `R~(u) = -2 u alpha u + B~^T(u) + gamma - sum_k (exp(-<u, xi_k>) - 1 + <chi(xi_k), u>) M_k`.
#[derive(Debug, Clone)]
pub struct TruncatedRhs<'a> {
    pub params: &'a TruncatedParams,
    pub projected: bool,
    chis: Vec<SymMatrix>,
}

impl<'a> TruncatedRhs<'a> {
    pub fn new(params: &'a TruncatedParams, projected: bool) -> Self {
        let chis = params.mu.atoms.iter().map(|a| TruncatedParams::chi(&a.xi)).collect();
        TruncatedRhs { params, projected, chis }
    }
}

impl RiccatiSystem for TruncatedRhs<'_> {
    fn dim(&self) -> usize {
        self.params.d
    }

    fn alpha(&self) -> &SymMatrix {
        &self.params.alpha
    }

    fn growth_constant(&self) -> Result<f64> {
        Ok(growth_constant(&crate::model::detruncate(self.params)?)?.c)
    }

    fn projected(&self) -> bool {
        self.projected
    }

    fn eval(&self, u: &CSymMatrix) -> Result<(Complex64, CSymMatrix)> {
        let p = self.params;
        let has_jumps = !(p.m.is_empty() && p.mu.is_empty());
        let projected = exponent_arg(u, self.projected, has_jumps)?;
        let e = projected.as_ref().unwrap_or(u);

        let mut psi =
            u.sandwich(&p.alpha).scale(-2.0).add(&p.drift_tilde.adjoint_complex_unchecked(u)).add_real(&p.gamma);
        for (atom, chi) in p.mu.atoms.iter().zip(&self.chis) {
            let coef = (-e.dot_real(&atom.xi)).exp() - 1.0 + u.dot_real(chi);
            psi = psi.sub(&CSymMatrix::from_real(atom.weight_matrix.clone()).scale_complex(coef));
        }
        let phi = u.dot_real(&p.b) + p.c - p.m.transform_unchecked(e);
        Ok((phi, psi))
    }
}

/// `R(u)` for the truncation-free system; requires `Re u` PSD.
pub fn rhs_psi(params: &AffineParams, u: &CSymMatrix) -> Result<CSymMatrix> {
    RiccatiRhs::new(params).psi(u)
}

/// `F(u)` for the truncation-free system; requires `Re u` PSD.
pub fn rhs_phi(params: &AffineParams, u: &CSymMatrix) -> Result<Complex64> {
    RiccatiRhs::new(params).phi(u)
}
