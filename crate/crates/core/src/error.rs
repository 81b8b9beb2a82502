use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// No allocation can meet the SNR target with the available channels.
    #[error("infeasible: {0}")]
    Infeasible(&'static str),

    /// The integral or expectation diverges for the given arguments.
    #[error("divergent: {0}")]
    Divergent(&'static str),

    /// The root finder was handed an interval whose endpoints have the same sign.
    #[error("root not bracketed: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    /// Iteration cap reached before the tolerance was met.
    #[error("no convergence after {iterations} iterations (estimate {estimate}, error {error})")]
    NonConvergence {
        estimate: f64,
        error: f64,
        iterations: usize,
    },

    /// Caller combined inputs that do not belong together.
    #[error("usage error: {0}")]
    Usage(&'static str),
}
