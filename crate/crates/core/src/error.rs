use thiserror::Error;

use crate::schemes::Scheme;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("prevalence must lie in (0, 1), got p = {0}")]
    Prevalence(f64),

    #[error("{scheme} size {size} is below the minimum {min}")]
    Size { scheme: Scheme, size: f64, min: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("{method} did not converge within {max_iter} iterations")]
    NoConvergence {
        method: &'static str,
        max_iter: usize,
    },

    #[error("adaptive quadrature exceeded depth {depth} near x = {at}")]
    QuadratureDepth { depth: usize, at: f64 },

    #[error("q = {q} is outside the region where {what} is defined ({region})")]
    Region {
        q: f64,
        what: &'static str,
        region: String,
    },

    #[error("cohort of length {len} does not fit {scheme} (expected {expected})")]
    Shape {
        scheme: Scheme,
        len: usize,
        expected: String,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),
}
