//! Boundary data as the limit of interior data `u0 + I/n`.

use num_complex::Complex64;
use serde::Serialize;

use super::solve::{pack, solve, unpack, RiccatiSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::model::AffineParams;
use crate::symcore::{CSymMatrix, SymMatrix, PSD_TOL};

/// Tails below this multiple of the solver tolerance count as converged.
const TAIL_NOISE_FACTOR: f64 = 100.0;

/// Extrapolation only uses levels with `n >= n_max / EXTRAPOLATION_WINDOW`;
/// the coarse levels sit too far from `h = 0` and spoil the tables when
/// `psi` has a singularity just below `h = 0`.
const EXTRAPOLATION_WINDOW: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitLevel {
    pub n: usize,
    pub phi: Complex64,
    pub psi: CSymMatrix,
    /// `||psi_n(T) - psi_{n/2}(T)||` for powers of two past the first.
    pub tail: Option<f64>,
}

/// Convergence table of `psi(T, u0 + I/n)` for `n = 1, 2, 3, 4, 6, 8, ..., n_max`
/// (powers of two and their midpoints `3 * 2^k`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLimit {
    pub levels: Vec<LimitLevel>,
    /// Tails along the powers of two decrease (or sit at the solver noise
    /// floor) from level to level.
    pub cauchy: bool,
    /// Extrapolated `(phi(T), psi(T))`; `None` when the tails do not decrease.
    pub limit: Option<(Complex64, CSymMatrix)>,
    /// Larger of the two choices' error estimates.
    pub extrapolation_error: f64,
    pub psi_choice: ExtrapolationChoice,
    pub phi_choice: ExtrapolationChoice,
    /// Trajectory for `n = n_max`.
    #[serde(skip)]
    pub finest: RiccatiSolution,
}

impl BoundaryLimit {
    /// `exp(-phi - <psi, x>)` at the limit, if one was claimed.
    pub fn transform(&self, x: &SymMatrix) -> Option<Complex64> {
        self.limit.as_ref().map(|(phi, psi)| (-phi - psi.dot_real(x)).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Polynomial in `h = 1/n` (Neville).
    Romberg,
    /// Diagonal rational function in `h` (Bulirsch-Stoer).
    Rational,
}

/// Table entry used for the limit of one component block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtrapolationChoice {
    pub method: Extrapolation,
    /// Column of the table (0 = plain `n_max` value).
    pub column: usize,
    /// Difference between the two finest rows of that column.
    pub error: f64,
}

/// Picks, over both tables, the column whose two finest rows differ least on
/// the entries `range`.
fn choose(tables: &[(Extrapolation, Vec<Vec<Vec<f64>>>)], range: std::ops::Range<usize>) -> (ExtrapolationChoice, Vec<f64>) {
    let mut best: Option<(ExtrapolationChoice, Vec<f64>)> = None;
    for (method, table) in tables {
        let last = &table[table.len() - 1];
        let prev = &table[table.len() - 2];
        for column in 0..prev.len() {
            let error = dist(&last[column][range.clone()], &prev[column][range.clone()]);
            if best.as_ref().is_none_or(|b| error < b.0.error) {
                best = Some((ExtrapolationChoice { method: *method, column, error }, last[column][range.clone()].to_vec()));
            }
        }
    }
    best.expect("at least two rows")
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Extrapolation tables to `h = 0` for decreasing nodes `hs`; row `i` has
/// `i + 1` columns.
fn romberg_table(hs: &[f64], ys: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let mut table: Vec<Vec<Vec<f64>>> = Vec::new();
    for (i, y) in ys.iter().enumerate() {
        let mut row = vec![y.clone()];
        for k in 1..=i {
            let f = 1.0 / (hs[i - k] / hs[i] - 1.0);
            let next = row[k - 1].iter().zip(&table[i - 1][k - 1]).map(|(a, b)| a + (a - b) * f).collect();
            row.push(next);
        }
        table.push(row);
    }
    table
}

fn rational_table(hs: &[f64], ys: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let mut table: Vec<Vec<Vec<f64>>> = Vec::new();
    for (i, y) in ys.iter().enumerate() {
        let mut row = vec![y.clone()];
        for k in 1..=i {
            let ratio = hs[i - k] / hs[i];
            let next = (0..y.len())
                .map(|q| {
                    let a = row[k - 1][q];
                    let b = table[i - 1][k - 1][q];
                    let c = if k >= 2 { table[i - 1][k - 2][q] } else { 0.0 };
                    let num = a - b;
                    let den = ratio * (1.0 - num / (a - c)) - 1.0;
                    let v = a + num / den;
                    if num == 0.0 || !v.is_finite() {
                        a
                    } else {
                        v
                    }
                })
                .collect();
            row.push(next);
        }
        table.push(row);
    }
    table
}

/// `1, 2, 3, 4, 6, 8, 12, ..., n_max`.
fn level_ns(n_max: usize) -> Vec<usize> {
    let mut ns = vec![1];
    let mut n = 2;
    while n <= n_max {
        if n >= 4 {
            ns.push(3 * n / 4);
        }
        ns.push(n);
        n *= 2;
    }
    ns
}

/// Solves from `u_n = u0 + I/n` for `n = 1, 2, 3, 4, 6, ..., n_max`, checks
/// that `||psi_{2n}(T) - psi_n(T)||` decreases along the powers of two and
/// extrapolates the finer levels to `n = infinity` in `h = 1/n`, polynomially
/// and rationally, keeping for `psi` and `phi` separately whichever table
/// column changes least between the two finest rows.
pub fn boundary_limit(
    params: &AffineParams,
    u0: &CSymMatrix,
    t: f64,
    n_max: usize,
    cfg: &SolverConfig,
) -> Result<BoundaryLimit> {
    if n_max < 2 || !n_max.is_power_of_two() {
        return Err(Error::Domain(format!("n_max must be a power of two >= 2, got {n_max}")));
    }
    if !u0.re.is_psd(PSD_TOL) {
        return Err(Error::Domain("real part of u0 must be positive semidefinite".into()));
    }
    let d = params.d;
    let mut levels: Vec<LimitLevel> = Vec::new();
    let mut finest = None;
    let mut prev_power: Option<CSymMatrix> = None;
    for n in level_ns(n_max) {
        let un = u0.add_real(&SymMatrix::identity(d).scale(1.0 / n as f64));
        let sol = solve(params, &un, t, cfg)?;
        let (phi, psi) = (sol.phi_end(), sol.psi_end().clone());
        let mut tail = None;
        if n.is_power_of_two() {
            tail = prev_power.as_ref().map(|prev| psi.sub(prev).frobenius_norm());
            prev_power = Some(psi.clone());
        }
        levels.push(LimitLevel { n, phi, psi, tail });
        finest = Some(sol);
    }
    let finest = finest.expect("at least two levels");

    let scale = levels.iter().map(|l| l.psi.frobenius_norm()).fold(1.0, f64::max);
    let floor = TAIL_NOISE_FACTOR * (cfg.abs_tol + cfg.rel_tol * scale);
    let tails: Vec<f64> = levels.iter().filter_map(|l| l.tail).collect();
    let cauchy = tails.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);

    let window: Vec<&LimitLevel> = levels.iter().filter(|l| l.n * EXTRAPOLATION_WINDOW >= n_max).collect();
    let hs: Vec<f64> = window.iter().map(|l| 1.0 / l.n as f64).collect();
    let ys: Vec<Vec<f64>> = window.iter().map(|l| pack(l.phi, &l.psi)).collect();
    let tables = [(Extrapolation::Romberg, romberg_table(&hs, &ys)), (Extrapolation::Rational, rational_table(&hs, &ys))];
    let np = ys[0].len() - 2;
    let (psi_choice, mut value) = choose(&tables, 0..np);
    let (phi_choice, phi) = choose(&tables, np..np + 2);
    value.extend(phi);
    let extrapolation_error = psi_choice.error.max(phi_choice.error);
    let limit = if cauchy { Some(unpack(d, &value)) } else { None };
    if !cauchy {
        log::warn!("boundary limit: tails {tails:?} do not decrease; no limit claimed");
    }
    Ok(BoundaryLimit { levels, cauchy, limit, extrapolation_error, psi_choice, phi_choice, finest })
}
