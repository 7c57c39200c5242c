//! Adaptive Simpson quadrature on [a,b].
//!
//! Integrands in this crate are piecewise smooth with known breakpoints (the
//! atoms of a step function, the constraint point |q|), so the caller passes
//! those as split points and each panel sees a smooth function.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// ∫_a^b f, to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b >= a) {
        return Err(Error::domain(format!("bad interval [{a},{b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Like [`adaptive_simpson`] but splits the domain at the interior points of
/// `splits` first.
pub fn adaptive_simpson_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    splits: &[f64],
) -> Result<f64> {
    if !(b >= a) {
        return Err(Error::domain(format!("bad interval [{a},{b}]")));
    }
    let mut pts: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|&s| s > a && s < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let panels = pts.len() - 1;
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += adaptive_simpson(&f, w[0], w[1], tol / panels as f64)?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::numeric(format!(
            "quadrature did not converge on [{a},{b}] (residual {delta:e})"
        )));
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}
