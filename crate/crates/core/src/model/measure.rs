//! Finite-activity jump measures with atomic support.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symcore::{CSymMatrix, SymMatrix, PSD_TOL};

/// Atom of the constant jump measure `m`: jump size `xi`, intensity `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarAtom {
    pub xi: SymMatrix,
    pub weight: f64,
}

/// Atom of the linear jump coefficient `mu`: jump size `xi`, PSD weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixAtom {
    pub xi: SymMatrix,
    pub weight_matrix: SymMatrix,
}

/// Constant jump term `m = sum_k w_k delta_{xi_k}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    pub atoms: Vec<ScalarAtom>,
}

/// Linear jump coefficient `mu = sum_k M_k delta_{xi_k}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixAtomicMeasure {
    pub atoms: Vec<MatrixAtom>,
}

fn check_jump(xi: &SymMatrix, d: usize, what: &str, k: usize) -> Result<()> {
    if xi.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: xi.dim() });
    }
    if !xi.is_finite() || xi.frobenius_norm() == 0.0 {
        return Err(Error::InvalidParams(format!("{what}.atoms[{k}].xi must be a nonzero finite matrix")));
    }
    if !xi.is_psd(PSD_TOL) {
        return Err(Error::InvalidParams(format!("{what}.atoms[{k}].xi is not positive semidefinite")));
    }
    Ok(())
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(atoms: Vec<ScalarAtom>) -> Self {
        AtomicMeasure { atoms }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Checks every atom: `xi` PSD nonzero, weight finite and positive.
    pub fn check(&self, d: usize) -> Result<()> {
        for (k, a) in self.atoms.iter().enumerate() {
            check_jump(&a.xi, d, "m", k)?;
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::InvalidParams(format!("m.atoms[{k}].weight must be positive, got {}", a.weight)));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub(crate) fn transform_unchecked(&self, u: &CSymMatrix) -> Complex64 {
        self.atoms.iter().map(|a| a.weight * ((-u.dot_real(&a.xi)).exp() - 1.0)).sum()
    }
}

impl MatrixAtomicMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(atoms: Vec<MatrixAtom>) -> Self {
        MatrixAtomicMeasure { atoms }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn check(&self, d: usize) -> Result<()> {
        for (k, a) in self.atoms.iter().enumerate() {
            check_jump(&a.xi, d, "mu", k)?;
            if a.weight_matrix.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: a.weight_matrix.dim() });
            }
            if !a.weight_matrix.is_finite() || !a.weight_matrix.is_psd(PSD_TOL) {
                return Err(Error::InvalidParams(format!("mu.atoms[{k}].weightMatrix is not positive semidefinite")));
            }
        }
        Ok(())
    }

    /// `sum_k tr(M_k)`.
    pub fn total_trace(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight_matrix.trace()).sum()
    }

    pub(crate) fn transform_unchecked(&self, u: &CSymMatrix) -> CSymMatrix {
        let d = u.dim();
        let mut acc = CSymMatrix::zeros(d);
        for a in &self.atoms {
            let coef = (-u.dot_real(&a.xi)).exp() - 1.0;
            acc = acc.add(&CSymMatrix::from_real(a.weight_matrix.clone()).scale_complex(coef));
        }
        acc
    }
}

fn require_tube(u: &CSymMatrix) -> Result<()> {
    if !u.re.is_psd(PSD_TOL) {
        return Err(Error::Domain("real part of u must be positive semidefinite".into()));
    }
    Ok(())
}

/// `sum_k w_k (exp(-<u, xi_k>) - 1)` for `Re u` PSD.
pub fn jump_transform_m(m: &AtomicMeasure, u: &CSymMatrix) -> Result<Complex64> {
    require_tube(u)?;
    for a in &m.atoms {
        if a.xi.dim() != u.dim() {
            return Err(Error::DimensionMismatch { expected: u.dim(), got: a.xi.dim() });
        }
    }
    Ok(m.transform_unchecked(u))
}

/// `sum_k (exp(-<u, xi_k>) - 1) M_k` for `Re u` PSD.
pub fn jump_transform_mu(mu: &MatrixAtomicMeasure, u: &CSymMatrix) -> Result<CSymMatrix> {
    require_tube(u)?;
    for a in &mu.atoms {
        if a.xi.dim() != u.dim() {
            return Err(Error::DimensionMismatch { expected: u.dim(), got: a.xi.dim() });
        }
    }
    Ok(mu.transform_unchecked(u))
}

/// Truncation function `chi(xi) = xi * min(1, 1/||xi||)`.
pub fn truncation(xi: &SymMatrix) -> SymMatrix {
    let n = xi.frobenius_norm();
    if n <= 1.0 {
        xi.clone()
    } else {
        xi.scale(1.0 / n)
    }
}
