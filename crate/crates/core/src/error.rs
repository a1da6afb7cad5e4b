use thiserror::Error;

/// Errors produced by grid construction, transforms and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// A field fed to an integral operator has no declared compact support.
    #[error("operator input has no declared support radius (aliasing hazard)")]
    MissingSupport,

    /// sup|mu| is too close to 1 for the contraction theory to apply.
    #[error("nondegeneracy violated: sup|mu| = {0} is not < 1")]
    Degenerate(f64),

    #[error("ellipticity violation: {0}")]
    Ellipticity(String),

    #[error("resolution insufficient for homeomorphism certification (min Jacobian = {0})")]
    NonpositiveJacobian(f64),

    #[error("point {0} is outside the certified image region")]
    OutOfRange(String),

    #[error("Newton iteration failed to converge while inverting the map")]
    NewtonStagnation,

    #[error("solver diverged: {0}")]
    Diverged(String),

    /// Iterate norm exceeded the a priori guard during continuation.
    #[error("blow-up guard triggered: {0}")]
    Blowup(String),

    #[error("field is not A-harmonic with the given source: curl residual {0}")]
    NotConjugate(f64),

    #[error("map inversion failed at {failed} of {total} image nodes")]
    InversionCoverage { failed: usize, total: usize },

    #[error("grids are incompatible: {0}")]
    GridMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
