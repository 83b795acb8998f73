use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent arguments (sizes, ranges, grids).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge on [{lo}, {hi}] (partial value {partial}, error estimate {error})")]
    Quadrature {
        lo: f64,
        hi: f64,
        partial: f64,
        error: f64,
    },

    /// An iterative solver stopped without converging.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// A model coefficient produced NaN or an infinite value.
    #[error("non-finite {coefficient} coefficient at t = {t}")]
    NonFinite { t: f64, coefficient: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("exponent p = {p} must lie in (0, 1)")))
    }
}
