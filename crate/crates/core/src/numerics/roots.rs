use super::Tolerance;
use crate::{Error, Result};

/// Bisection on a monotone function bracketed by `[lo, hi]`.
///
/// Stops when `|g(x)| <= tol.abs`, when the bracket width drops below
/// `tol.rel·|x|`, or when the midpoint no longer moves in floating point.
pub fn bisect<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Domain("bisect needs finite lo <= hi"));
    }
    let (mut lo, mut hi) = (lo, hi);
    let g_lo = g(lo);
    if g_lo.abs() <= tol.abs || g_lo == 0.0 {
        return Ok(lo);
    }
    let g_hi = g(hi);
    if g_hi.abs() <= tol.abs || g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() || g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    let lo_negative = g_lo < 0.0;
    for _ in 0..tol.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let g_mid = g(mid);
        if g_mid == 0.0 || g_mid.abs() <= tol.abs {
            return Ok(mid);
        }
        if (g_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
        let x = lo + 0.5 * (hi - lo);
        if hi - lo <= tol.rel * x.abs() {
            return Ok(x);
        }
    }
    let x = lo + 0.5 * (hi - lo);
    Err(Error::NonConvergence {
        estimate: x,
        error: hi - lo,
        iterations: tol.max_iter,
    })
}
