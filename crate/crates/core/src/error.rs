use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the toolkit.
///
/// Variants split into validation failures (bad inputs, bad configuration)
/// and numerical failures (the discretization or a sampler could not deliver
/// a trustworthy answer). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("random specification requires a seed")]
    MissingSeed,

    #[error(
        "covariance is not positive definite on this grid: smallest embedding eigenvalue {min_eigenvalue:.3e} (largest {max_eigenvalue:.3e})"
    )]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("circulant embedding clipped {fraction:.3e} of the spectral mass (limit {limit:.1e}); covariance inconsistent with the grid")]
    ClippedMass { fraction: f64, limit: f64 },

    #[error("box too small at k = {k}: wall potential {wall_potential:.4e} is below target energy {energy:.4e}")]
    BoxInadequate {
        k: f64,
        wall_potential: f64,
        energy: f64,
    },

    #[error("eigenvalues {n} and {} collide at k = {k}: gap {gap:.3e}", n + 1)]
    Degenerate { k: f64, n: usize, gap: f64 },

    #[error("eigensolver did not converge at k = {k} for eigenvalue {n}: residual {residual:.3e} (matrix order {order}, norm bound {norm:.3e})")]
    NoConvergence {
        k: f64,
        n: usize,
        residual: f64,
        order: usize,
        norm: f64,
    },

    #[error("band truncation captured only {capture:.6} of the packet norm (minimum {minimum}); increase n_max")]
    CaptureTooLow { capture: f64, minimum: f64 },

    #[error("packet does not decay at the k-window edges: edge/max ratio {ratio:.3e}")]
    PacketNotDecaying { ratio: f64 },

    #[error("fiber at k = {k}: {source}")]
    AtFiber { k: f64, source: Box<Error> },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::ClippedMass { .. }
            | Error::BoxInadequate { .. }
            | Error::Degenerate { .. }
            | Error::NoConvergence { .. }
            | Error::CaptureTooLow { .. }
            | Error::PacketNotDecaying { .. } => true,
            Error::AtFiber { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_fiber(self, k: f64) -> Error {
        match self {
            e @ Error::AtFiber { .. } => e,
            e => Error::AtFiber {
                k,
                source: Box::new(e),
            },
        }
    }
}
