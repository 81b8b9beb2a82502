//! Special functions and solvers used by the analytic expectations.
//!
//! Every expected relay power reduces to the exponential integral
//! `E1(x) = ∫_x^∞ e^{-t}/t dt`; thresholds come out of monotone equations
//! solved by bisection. [`integrate_tail`] is a general adaptive quadrature
//! used as an independent check of the closed forms.

mod e1;
mod quadrature;
mod roots;

pub use e1::{exp_integral_e1, k_of_tau};
pub use quadrature::integrate_tail;
pub use roots::bisect;

use crate::{Error, Result};

/// Stopping rule shared by the iterative routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_iter: usize,
}

impl Tolerance {
    /// Special functions and quadrature.
    pub const SPECIAL: Tolerance = Tolerance {
        rel: 1e-12,
        abs: 0.0,
        max_iter: 200,
    };

    /// Root finding.
    pub const ROOT: Tolerance = Tolerance {
        rel: 1e-9,
        abs: 0.0,
        max_iter: 200,
    };

    pub fn new(rel: f64, abs: f64, max_iter: usize) -> Result<Self> {
        if !(rel >= 0.0 && abs >= 0.0) || (rel == 0.0 && abs == 0.0) {
            return Err(Error::Domain("tolerance needs rel > 0 or abs > 0"));
        }
        if max_iter == 0 {
            return Err(Error::Domain("tolerance needs max_iter >= 1"));
        }
        Ok(Tolerance { rel, abs, max_iter })
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::SPECIAL
    }
}
