use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge in sector 2S = {spin2}")]
    EigenNonConvergence { spin2: u32 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("reduced state is not a valid density: {0}")]
    InvalidState(String),

    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("MF+RPA diverges: {0}")]
    Divergence(String),

    #[error("static path + RPA breaks down at T = {temperature} (validity margin 2π - β|ω| = {margin})")]
    Breakdown { temperature: f64, margin: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("dense oracle limited to n <= {max}, got n = {n}")]
    SizeLimit { n: usize, max: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidParams(_) | Error::Domain(_) | Error::SizeLimit { .. })
    }
}
