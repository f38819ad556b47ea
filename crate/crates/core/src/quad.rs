// SPDX-License-Identifier: MIT OR Apache-2.0

//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`.
///
/// Exact (up to rounding) for cubic polynomials on `[lo, hi]`, so callers
/// integrating piecewise-smooth functions should split at the breaks.
pub fn adaptive_simpson<T: Real>(f: &dyn Fn(T) -> T, lo: T, hi: T, tol: T) -> Result<T> {
    if hi == lo {
        return Ok(T::zero());
    }
    let two = T::lit(2.0);
    let mid = (lo + hi) / two;
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = simpson(lo, hi, flo, fmid, fhi);
    let v = recurse(f, lo, hi, flo, fmid, fhi, whole, tol, MAX_DEPTH).ok_or(Error::Quadrature {
        lo: lo.as_f64(),
        hi: hi.as_f64(),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        })
    }
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real>(
    f: &dyn Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> Option<T> {
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return None;
    }
    if delta.abs() <= T::lit(15.0) * tol {
        return Some(left + right + delta / T::lit(15.0));
    }
    if depth == 0 {
        return None;
    }
    let l = recurse(f, a, m, fa, flm, fm, left, tol / two, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, tol / two, depth - 1)?;
    Some(l + r)
}
