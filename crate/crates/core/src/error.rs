use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's preconditions (shapes, ranges, counts).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed or unusable input data.
    #[error("data error: {0}")]
    Data(String),

    #[error("eigendecomposition did not converge (condition number {condition:.3e})")]
    EigenFailure { condition: f64 },

    #[error("matrix is not positive definite (minimum eigenvalue {min_eigenvalue:.3e}); call regularize first")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error(
        "matrix is ill-conditioned (condition number {condition:.3e} exceeds {limit:.1e}); \
         regularize the input with a larger eps"
    )]
    IllConditioned { condition: f64, limit: f64 },

    #[error("neighbour graph is disconnected at vertex {vertex}; increase k")]
    DisconnectedGraph { vertex: usize },

    #[error("no random-walk eigenvalue exceeds {floor:e}; the diffusion spectrum is degenerate")]
    DegenerateSpectrum { floor: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

/// Broad category of an [`Error`], used for process exit codes and the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Contract,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Contract(_) => ErrorKind::Contract,
            Error::Data(_) | Error::Io { .. } | Error::Serde(_) => ErrorKind::Data,
            Error::EigenFailure { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NotSymmetric { .. }
            | Error::IllConditioned { .. }
            | Error::DisconnectedGraph { .. }
            | Error::DegenerateSpectrum { .. } => ErrorKind::Numerical,
        }
    }

    /// Process exit code: 2 contract/usage, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Contract => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
