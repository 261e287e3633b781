use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported lattice rank {0} (expected 1, 2 or 3)")]
    UnsupportedRank(usize),
    #[error("lattice basis is degenerate")]
    DegenerateBasis,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate simplex: degree {degree}, cell {cell}")]
    DegenerateSimplex { degree: usize, cell: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigen-solver failed at character {character:?}: {reason}")]
    EigenFailure { character: Vec<f64>, reason: String },
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("quadrature orders disagree on cell {cell}: {low} vs {high}")]
    QuadratureMismatch { cell: usize, low: f64, high: f64 },
    #[error("non-integrable tail: {0}")]
    NonIntegrableTail(String),
    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),
    #[error("diagnostic check failed: {0}")]
    Diagnostic(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::EigenFailure { .. }
                | Error::Domain(_)
                | Error::QuadratureMismatch { .. }
                | Error::NonIntegrableTail(_)
                | Error::DegenerateOperator(_)
                | Error::Diagnostic(_)
                | Error::DegenerateSimplex { .. }
        )
    }
}
