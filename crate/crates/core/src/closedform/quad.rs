//! Adaptive Simpson quadrature of vector-valued integrands.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn simpson(h: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    (0..fa.len()).map(|i| h / 6.0 * (fa[i] + 4.0 * fm[i] + fb[i])).collect()
}

struct Ctx<'f, F> {
    f: &'f mut F,
    evals: usize,
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    ctx: &mut Ctx<'_, F>,
    a: f64,
    b: f64,
    fa: &[f64],
    fm: &[f64],
    fb: &[f64],
    whole: &[f64],
    tol: f64,
    depth: u32,
) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = (ctx.f)(lm)?;
    let frm = (ctx.f)(rm)?;
    ctx.evals += 2;
    let left = simpson(m - a, fa, &flm, fm);
    let right = simpson(b - m, fm, &frm, fb);
    let both: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    let delta = max_diff(&both, whole);
    if !delta.is_finite() {
        return Err(Error::NonFinite);
    }
    if delta <= 15.0 * tol {
        return Ok(both.iter().zip(whole).map(|(s2, s1)| s2 + (s2 - s1) / 15.0).collect());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NoConvergence(format!("adaptive Simpson on [{a}, {b}] at depth {depth}")));
    }
    let l = recurse(ctx, a, m, fa, &flm, fm, &left, 0.5 * tol, depth + 1)?;
    let r = recurse(ctx, m, b, fm, &frm, fb, &right, 0.5 * tol, depth + 1)?;
    Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
}

/// `int_a^b f(s) ds` to absolute tolerance `tol` in the max norm.
pub(crate) fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let fa = f(a)?;
    if a == b {
        return Ok(vec![0.0; fa.len()]);
    }
    let fb = f(b)?;
    let fm = f(0.5 * (a + b))?;
    let mut ctx = Ctx { f: &mut f, evals: 3 };
    // a first split guards against symmetric integrands fooling the initial estimate
    let m = 0.5 * (a + b);
    let fl = (ctx.f)(0.5 * (a + m))?;
    let fr = (ctx.f)(0.5 * (m + b))?;
    let left_whole = simpson(m - a, &fa, &fl, &fm);
    let right_whole = simpson(b - m, &fm, &fr, &fb);
    let l = recurse(&mut ctx, a, m, &fa, &fl, &fm, &left_whole, 0.5 * tol, 1)?;
    let r = recurse(&mut ctx, m, b, &fm, &fr, &fb, &right_whole, 0.5 * tol, 1)?;
    log::trace!("adaptive Simpson used {} evaluations", ctx.evals);
    Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
}
