use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("covariance violates the uncertainty relation: minimum eigenvalue of Γ + iΩ/2 is {min_eigenvalue:e}")]
    Uncertainty { min_eigenvalue: f64 },

    #[error("covariance is not positive definite (determinant {det:e})")]
    NotPositiveDefinite { det: f64 },

    #[error("phase of U[{row}][{col}] is indeterminate (vanishing amplitude)")]
    IndeterminatePhase { row: usize, col: usize },

    #[error("Fisher matrix is singular or ill-conditioned (condition number {condition:e}); use crb_pseudo for identifiable combinations")]
    SingularFisher { condition: f64 },

    #[error("weights lie in the kernel of the Fisher matrix: combination is not identifiable")]
    NotIdentifiable,

    #[error("estimator failed: {0}")]
    Estimator(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
