use thiserror::Error;

/// Errors raised anywhere in the solver and analysis stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("vacuum proximity: min(1 + varrho) = {min:.3e} is below the guard {guard:.1e}")]
    Vacuum { min: f64, guard: f64 },

    #[error("solver diverged: non-finite values in {field} at t = {time}")]
    Divergence { field: String, time: f64 },

    #[error("time step {dt} exceeds the advective bound {limit:.4e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("infeasible spectral floor at mode {mode:?}: need {required:.4e}, envelope allows {available:.4e}")]
    InfeasibleFloor {
        mode: [i64; 3],
        required: f64,
        available: f64,
    },

    #[error("support precondition violated: only {fraction:.4} of the mass lies in the central half-box")]
    Support { fraction: f64 },

    #[error("fit: {0}")]
    Fit(String),

    #[error("no valid window: {0}")]
    NoValidWindow(String),

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("comparison lemma hypothesis: {0}")]
    Hypothesis(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
