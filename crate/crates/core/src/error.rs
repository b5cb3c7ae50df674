use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("Fock truncation n_max={n_max} is outside the stable range: {reason}")]
    Truncation { n_max: usize, reason: String },

    #[error("degenerate ansatz: norm {0} is not positive and finite")]
    DegenerateAnsatz(f64),

    #[error("component index {0} outside 1..=4")]
    ComponentIndex(usize),

    #[error("no optimizer start converged (best energy {energy})")]
    NotConverged {
        energy: f64,
        best: Box<crate::optimizer::OptimResult>,
    },

    #[error("ED did not converge below tol {tol} before n_max cap {cap} (last delta {delta})")]
    EdNotConverged { tol: f64, cap: usize, delta: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
