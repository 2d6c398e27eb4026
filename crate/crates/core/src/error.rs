use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported parameters r={r}, k={k}: need r, k >= 2 and (r, k) != (2, 2)")]
    UnsupportedParameters { r: usize, k: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("density c={c} is below the threshold c_rk={c_rk}; no root exists")]
    NoSolution { c: f64, c_rk: f64 },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("sampler saturated after {attempts} attempts: {what}")]
    Saturation { attempts: u64, what: String },

    #[error("vertex {0} belongs to the k-core and was never stripped")]
    NotStripped(u32),

    #[error("instance has {n} bins, exhaustive search is capped at {cap}")]
    SizeLimit { n: usize, cap: usize },

    #[error("H is not a sub-configuration of H'")]
    Containment,

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Saturation { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
