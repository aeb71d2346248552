use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum CavError {
    #[error("{what} = {value} is outside its domain {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("state is at the vacuum; the conserved map cannot be inverted")]
    VacuumInversion,
    #[error("characteristic direction aligned with the flow angle (denominator {denom:e})")]
    CharacteristicAligned { denom: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("integrator failed at nu = {nu:e}, xi = {xi}: {msg}")]
    Integrator { nu: f64, xi: f64, msg: String },
    #[error("grid mismatch: {0}")]
    Grid(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error("no convergence after {iters} iterations (last update {last_update:e}, residual {last_residual:e})")]
    NoConvergence {
        iters: usize,
        last_update: f64,
        last_residual: f64,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CavError>;

pub(crate) fn domain(what: &'static str, value: f64, range: &'static str) -> CavError {
    CavError::Domain { what, value, range }
}
