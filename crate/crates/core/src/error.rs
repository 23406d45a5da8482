use thiserror::Error;

/// Crate-wide error type. The CLI maps these onto its exit-code contract:
/// parse/input problems are exit 2, domain and numerical failures exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge below 2^20 nodes (last={last:.17e}, previous={prev:.17e})")]
    QuadratureNonConvergence { last: f64, prev: f64 },

    #[error("radius schedule infeasible at n={n}: condition {condition} cannot be met with gap_log <= {limit:e}")]
    ScheduleInfeasible {
        n: usize,
        condition: &'static str,
        limit: f64,
    },

    #[error("sup profile validation failed: {0}")]
    ProfileValidation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code for the CLI contract: 2 input error, 3 domain error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Parse(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Domain(_)
            | Error::QuadratureNonConvergence { .. }
            | Error::ScheduleInfeasible { .. }
            | Error::ProfileValidation(_) => 3,
        }
    }
}
