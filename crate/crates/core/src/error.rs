use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureNonconvergence { estimate: f64, tolerance: f64 },

    #[error("log-linear fit diverged: residual {residual:.3e} exceeds {tolerance:.3e}")]
    FitDivergence { residual: f64, tolerance: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("under-resolved field: spectral tail ratio {ratio:.3e} above {limit:.1e}")]
    Resolution { ratio: f64, limit: f64 },

    #[error("weight tail check failed: {0}")]
    WeightTail(String),

    #[error("inner solver did not converge at step {step}: residual {residual:.3e} after {iterations} iterations")]
    InnerNonconvergence {
        step: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("negativity violation at step {step}: min value {min:.3e}")]
    Negativity { step: usize, min: f64 },

    #[error("horizon too short: log regime starts at t* = {t_star:.4e}, trajectory ends at {horizon:.4e}")]
    HorizonTooShort { t_star: f64, horizon: f64 },

    #[error("missing records: {0}")]
    MissingRecords(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
