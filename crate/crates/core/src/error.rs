use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} is not Hermitian (residual {residual:.3e})")]
    NotHermitian { what: &'static str, residual: f64 },

    #[error("generator violates the flat symmetry (residual {residual:.3e})")]
    FlatSymmetry { residual: f64 },

    #[error("map is not completely positive (Choi eigenvalue {eigenvalue:.6e})")]
    NotCompletelyPositive { eigenvalue: f64 },

    #[error("{what}: residual {residual:.3e} exceeds tolerance {tol:.3e}{}", at.as_ref().map(|s| format!(" at {s}")).unwrap_or_default())]
    ResidualTooLarge {
        what: &'static str,
        residual: f64,
        tol: f64,
        at: Option<String>,
    },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Picard iteration is not contracting (increments grew for 3 consecutive iterations ending at {iteration})")]
    NonContraction { iteration: usize, increments: Vec<f64> },

    #[error("problem too large: {rows} kernel rows exceeds the limit of {limit}")]
    TooLarge { rows: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse: {0}")]
    Parse(String),
}
