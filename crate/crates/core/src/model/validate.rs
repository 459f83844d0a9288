//! Admissibility checks for parameter sets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::drift::LinearDrift;
use super::params::{AffineParams, AlphaClass};
use crate::error::{Error, Result};
use crate::symcore::{boundary_pairs, BoundaryPair};

/// Seed of the random boundary pairs drawn by [`validate`].
pub const VALIDATION_SEED: u64 = 0x5eed_0001;

/// Complementarity slack allowed on a boundary pair before it is rejected.
pub const PAIR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity (smallest eigenvalue, smallest pairing, ...).
    pub value: f64,
    /// The check passes when `value >= threshold`.
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub d: usize,
    pub checks: Vec<Check>,
    pub alpha_class: Option<AlphaClass>,
    pub warnings: Vec<String>,
    pub pairs_tested: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Outcome of the sampled inward-pointing test.
#[derive(Debug, Clone, PartialEq)]
pub struct InwardPointing {
    pub passed: bool,
    pub worst_pair: Option<BoundaryPair>,
    pub worst_value: f64,
}

/// Checks `<B(x), u> >= -tol` on every pair and reports the minimizer.
pub fn inward_pointing_check(drift: &LinearDrift, pairs: &[BoundaryPair], tol: f64) -> Result<InwardPointing> {
    let mut worst: Option<(usize, f64)> = None;
    for (k, pair) in pairs.iter().enumerate() {
        let scale = 1.0 + pair.x.frobenius_norm() * pair.u.frobenius_norm();
        let inner = pair.x.dot(&pair.u);
        if inner.abs() > PAIR_TOL * scale {
            return Err(Error::Domain(format!("pair '{}' violates <x,u> = 0 (value {inner:e})", pair.label)));
        }
        let v = drift.apply(&pair.x)?.dot(&pair.u);
        if worst.is_none_or(|(_, w)| v < w) {
            worst = Some((k, v));
        }
    }
    Ok(match worst {
        None => InwardPointing { passed: true, worst_pair: None, worst_value: f64::INFINITY },
        Some((k, v)) => InwardPointing { passed: v >= -tol, worst_pair: Some(pairs[k].clone()), worst_value: v },
    })
}

fn eig_check(name: &'static str, x: &crate::symcore::SymMatrix, tol: f64, detail: &str) -> Check {
    let threshold = -tol * x.frobenius_norm().max(1.0);
    match x.min_eigenvalue() {
        Ok(l) => Check { name, passed: l >= threshold, value: l, threshold, detail: detail.to_string() },
        Err(e) => Check { name, passed: false, value: f64::NAN, threshold, detail: format!("{detail}: {e}") },
    }
}

/// Admissibility report for `params`, testing the drift on the canonical
/// boundary pairs plus `n_random_pairs` random ones.
pub fn validate(params: &AffineParams, n_random_pairs: usize, tol: f64) -> ValidationReport {
    let d = params.d;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();

    checks.push(eig_check("alpha_psd", &params.alpha, tol, "alpha must be positive semidefinite"));
    checks.push(eig_check("b_psd", &params.b, tol, "b must be positive semidefinite"));
    let dominance = params.b.sub(&params.alpha.scale((d - 1) as f64));
    checks.push(eig_check("drift_dominance", &dominance, tol, "b - (d-1) alpha must be positive semidefinite (b >= (d-1) alpha)"));
    checks.push(Check {
        name: "killing_rate",
        passed: params.c >= 0.0,
        value: params.c,
        threshold: 0.0,
        detail: "constant killing rate c must be non-negative".into(),
    });
    checks.push(eig_check("gamma_psd", &params.gamma, tol, "linear killing rate gamma must be positive semidefinite"));

    let m_ok = params.m.check(d);
    checks.push(Check {
        name: "m_atoms",
        passed: m_ok.is_ok(),
        value: params.m.atoms.len() as f64,
        threshold: 0.0,
        detail: m_ok.err().map_or_else(|| "finite atomic measure, (||xi|| ^ 1) m(dxi) integrable".into(), |e| e.to_string()),
    });
    let mu_ok = params.mu.check(d);
    checks.push(Check {
        name: "mu_atoms",
        passed: mu_ok.is_ok(),
        value: params.mu.atoms.len() as f64,
        threshold: 0.0,
        detail: mu_ok.err().map_or_else(|| "finite PSD-valued atomic measure, (||xi|| ^ 1) mu(dxi) integrable".into(), |e| e.to_string()),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let mut pairs_tested = 0;
    let inward = boundary_pairs(d, n_random_pairs, &mut rng).and_then(|pairs| {
        pairs_tested = pairs.len();
        inward_pointing_check(&params.drift, &pairs, tol)
    });
    checks.push(match inward {
        Ok(r) => Check {
            name: "inward_pointing",
            passed: r.passed,
            value: r.worst_value,
            threshold: -tol,
            detail: match &r.worst_pair {
                Some(p) if !r.passed => format!(
                    "<B(x),u> < 0 on boundary pair {} (x = {:?}, u = {:?})",
                    p.label,
                    p.x.to_rows(),
                    p.u.to_rows()
                ),
                Some(p) => format!("min <B(x),u> over {pairs_tested} pairs attained at {}", p.label),
                None => "no pairs".into(),
            },
        },
        Err(e) => Check { name: "inward_pointing", passed: false, value: f64::NAN, threshold: -tol, detail: e.to_string() },
    });

    let alpha_class = AlphaClass::of(&params.alpha, tol).ok();
    if alpha_class == Some(AlphaClass::DegenerateNonzero) {
        warnings.push(
            "alpha is degenerate but nonzero: the Fourier-Laplace transform results require alpha invertible or zero"
                .into(),
        );
    }

    ValidationReport { d, checks, alpha_class, warnings, pairs_tested }
}
