#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 1.0;
const MAX_TERMS: usize = 500;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below 1, Lentz continued fraction from 1 upwards. Relative
/// error is a few ulps across the range; underflows to 0 past `x ≈ 740`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("E1 needs x > 0"));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x < SERIES_LIMIT {
        series(x)
    } else {
        continued_fraction(x)
    })
}

/// Tail integral `K(τ) = ∫_τ^∞ e^{-x/2}/x dx`, which equals `E1(τ/2)`.
pub fn k_of_tau(tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain("K(tau) needs tau > 0"));
    }
    exp_integral_e1(0.5 * tau)
}

// E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)
fn series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0; // (-x)^k / k!
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        power *= -x / kf;
        let term = power / kf;
        sum += term;
        if term.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// E1(x) = e^{-x} · 1/(x+1- 1/(x+3- 4/(x+5- ...)))
fn continued_fraction(x: f64) -> f64 {
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h * (-x).exp()
}
