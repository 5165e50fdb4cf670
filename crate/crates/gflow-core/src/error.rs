//! Error type shared by all gflow modules.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Bad user input: grid parameters, flow preconditions, mismatched grids.
    #[error("{0}")]
    Validation(String),

    /// Explicit-scheme stability budget exceeded.
    #[error("cfl violation: dt = {dt:.3e} exceeds 0.2 h^2 = {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },

    /// A field stopped being finite during an evolution; `t` is the last good time.
    #[error("non-finite field values encountered; last good time t = {t}")]
    NonFinite { t: f64 },

    /// Iterative elliptic solve ran out of iterations.
    #[error("poisson solver did not converge after {iters} iterations (residual {residual:.3e})")]
    PoissonDiverged { iters: usize, residual: f64 },

    /// Snapshot file is malformed or of an unsupported version.
    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
