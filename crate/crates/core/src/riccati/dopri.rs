//! Dormand-Prince 5(4) with PI step-size control and dense output.

use serde::Serialize;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller constants
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Hard cap on the number of attempted steps.
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub(crate) struct DopriOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    /// Five coefficient vectors, concatenated.
    rcont: Vec<f64>,
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1()
    }

    /// Interpolated state at `t` (extrapolates outside the step).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.rcont.len() / 5;
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let r = |k: usize, i: usize| self.rcont[k * n + i];
        (0..n)
            .map(|i| r(0, i) + theta * (r(1, i) + theta1 * (r(2, i) + theta * (r(3, i) + theta1 * r(4, i)))))
            .collect()
    }
}

/// Why the integration loop ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum DopriStatus {
    Completed,
    /// The observer asked to stop after an accepted step.
    Stopped,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DopriRun {
    pub status: DopriStatus,
    #[cfg_attr(not(test), allow(dead_code))]
    pub t_last: f64,
    pub accepted: usize,
    pub rejected: usize,
}

fn error_norm(y: &[f64], ynew: &[f64], err: &[f64], opts: &DopriOptions) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..y.len() {
        let sk = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
        let e = (err[i] / sk).abs();
        if !e.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(e);
    }
    worst
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], span: f64, opts: &DopriOptions) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let sk: Vec<f64> = y0.iter().map(|y| opts.atol + opts.rtol * y.abs()).collect();
    let dnf: f64 = f0.iter().zip(&sk).map(|(f, s)| (f / s).powi(2)).sum();
    let dny: f64 = y0.iter().zip(&sk).map(|(y, s)| (y / s).powi(2)).sum();
    let hmax = opts.max_step.min(span);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(hmax);
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + h * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(t0 + h, &y1, &mut f1)?;
    let der2 = f1.iter().zip(f0).zip(&sk).map(|((a, b), s)| ((a - b) / s).powi(2)).sum::<f64>().sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    let h = (100.0 * h).min(h1).min(hmax);
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::NonFinite);
    }
    Ok(h)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`. After every accepted step
/// `observer(t, y, segment)` is called; returning `false` stops the run.
pub(crate) fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &DopriOptions,
    mut observer: O,
) -> Result<DopriRun>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64], DenseSegment) -> bool,
{
    let n = y0.len();
    let span = t_end - t0;
    if !(span > 0.0) {
        return Err(Error::Domain(format!("integration span must be positive, got {span}")));
    }
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ystage = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];

    f(t0, &y, &mut k1)?;
    let mut h = initial_step(&mut f, t0, &y, &k1, span, opts)?;
    let mut t = t0;
    let mut facold = 1e-4f64;
    let mut last_rejected = false;
    let mut accepted = 0;
    let mut rejected = 0;

    for _ in 0..MAX_STEPS {
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 10.0 * f64::EPSILON * t.abs().max(span) {
            return Ok(DopriRun { status: DopriStatus::StepUnderflow, t_last: t, accepted, rejected });
        }

        for i in 0..n {
            ystage[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ystage, &mut k2)?;
        for i in 0..n {
            ystage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ystage, &mut k3)?;
        for i in 0..n {
            ystage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ystage, &mut k4)?;
        for i in 0..n {
            ystage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ystage, &mut k5)?;
        for i in 0..n {
            ystage[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let tnew = if last { t_end } else { t + h };
        f(tnew, &ystage, &mut k6)?;
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(tnew, &ynew, &mut k7)?;
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&y, &ynew, &err, opts);

        if e <= 1.0 {
            let fac11 = e.powf(EXPO1);
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = (h / fac).min(opts.max_step);
            if last_rejected {
                hnew = hnew.min(h);
            }
            facold = e.max(1e-4);

            let mut rcont = vec![0.0; 5 * n];
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[i] = y[i];
                rcont[n + i] = ydiff;
                rcont[2 * n + i] = bspl;
                rcont[3 * n + i] = ydiff - h * k7[i] - bspl;
                rcont[4 * n + i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let segment = DenseSegment { t0: t, h, rcont };

            accepted += 1;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = tnew;
            last_rejected = false;
            if !observer(t, &y, segment) {
                return Ok(DopriRun { status: DopriStatus::Stopped, t_last: t, accepted, rejected });
            }
            if last {
                return Ok(DopriRun { status: DopriStatus::Completed, t_last: t, accepted, rejected });
            }
            h = hnew;
        } else {
            let shrink = if e.is_finite() { (e.powf(EXPO1) / SAFE).min(1.0 / FAC_MIN) } else { 1.0 / FAC_MIN };
            h /= shrink;
            rejected += 1;
            last_rejected = true;
        }
    }
    Err(Error::NoConvergence(format!("step limit {MAX_STEPS} reached at t = {t}")))
}
