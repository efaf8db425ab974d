//! Bracketing bisection.
//!
//! Both routines keep an invariant bracket and never evaluate outside it, so
//! they are safe on continuous but only piecewise-smooth functions.

use crate::error::{Error, Result};

/// Finds a root of `f` in `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs (or one of them is zero). Stops when the bracket is
/// narrower than `xtol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})"
        )));
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the switching point of a predicate with `accept(reject) == false`
/// and `accept(accept) == true`. Returns an accepted point within `xtol` of
/// the last rejected one. The endpoints may be given in either order.
pub fn bisect_predicate<P>(mut accept: P, mut reject: f64, mut accepted: f64, xtol: f64) -> f64
where
    P: FnMut(f64) -> bool,
{
    for _ in 0..200 {
        if (accepted - reject).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (reject + accepted);
        if mid == reject || mid == accepted {
            break;
        }
        if accept(mid) {
            accepted = mid;
        } else {
            reject = mid;
        }
    }
    accepted
}
