use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("non-finite profile value at Z = {depth}")]
    NonFiniteProfile { depth: f64 },

    #[error("invalid transform data: {0}")]
    InvalidTransform(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("branch point at xi = {0}")]
    BranchPoint(Complex64),

    #[error("xi = {0} lies on a branch cut")]
    OnCut(Complex64),

    #[error("too close to branch point (|q| = {0:e})")]
    NearBranchPoint(f64),

    #[error("integrator failed at {position}: {reason}")]
    Integrator { position: f64, reason: String },

    #[error("volterra iteration did not converge after {iterations} iterations (last iterate {last:e}, solution {norm:e})")]
    VolterraDivergence {
        iterations: usize,
        last: f64,
        norm: f64,
    },

    #[error("bridge singular at origin")]
    BridgeSingular,

    #[error("contour: {0}")]
    Contour(String),

    #[error("inconsistent zero at xi = {0}: no sheet determinant vanishes")]
    InconsistentZero(Complex64),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("ill-conditioned determinant at xi = {xi}: estimated relative error {error:e}; use smaller |Re xi|")]
    IllConditioned { xi: Complex64, error: f64 },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
