//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the certification engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A pivot fell below the singularity threshold during LU elimination,
    /// i.e. the matrix is numerically non-invertible.
    #[error("matrix is numerically singular")]
    SingularMatrix,

    /// Adaptive quadrature did not reach the requested tolerance within the
    /// recursion depth limit.
    #[error("quadrature did not converge within 60 recursion levels")]
    NonConvergedQuadrature,

    /// A point left the closed ball around the starting point on which the
    /// problem is defined.
    #[error("point at distance {distance} from the center is outside the domain ball of radius {radius}")]
    OutOfDomain { distance: f64, radius: f64 },

    /// Requested builtin problem is not in the corpus.
    #[error("unknown builtin problem {0:?}")]
    UnknownProblem(String),

    /// A tabulated modulus was evaluated beyond its last knot.
    #[error("modulus evaluated at r = {r} beyond the tabulated range [0, {r_max}]")]
    BeyondTabulatedRange { r: f64, r_max: f64 },

    /// The continuity modulus reached 1, so the slack factor 1/(1 - w0)
    /// blows up and the derivative may lose invertibility.
    #[error("continuity modulus saturated (w0 >= 1 - 1e-12) at radius {at}")]
    ModulusSaturated { at: f64 },

    /// A certified run was requested without a passing certificate.
    #[error("not certified: {0}")]
    NotCertified(String),

    /// A computation produced NaN or infinity.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Invalid construction or argument.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Expression or file parse failure.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
