use thiserror::Error;

/// Errors raised by assembly, verification and the channel solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid moment theory: {0}")]
    InvalidTheory(String),

    #[error("independent component selection for rank {rank} is not a coordinate chart")]
    SingularSelection { rank: usize },

    #[error("symmetrizer is not positive definite (min eigenvalue {min_eig:e})")]
    SymmetrizerNotSpd { min_eig: f64 },

    #[error("symmetrized flux matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("wall normal axis {requested} does not match the basis normal axis {basis}")]
    AxisMismatch { requested: char, basis: char },

    #[error("moment {0} is required but absent from the theory")]
    MissingMoment(&'static str),

    #[error("half-space flux of the normal velocity vanishes; cannot eliminate wall density")]
    DegenerateWallDensity,

    #[error("leading block of A_oe is singular (condition number {cond:e})")]
    SingularAoeHat { cond: f64 },

    #[error("Onsager matrix is not positive semi-definite (min eigenvalue {min_eig:e}, norm {norm:e})")]
    NonOnsager { min_eig: f64, norm: f64 },

    #[error("boundary matrix has {rows} rows, expected {expected}")]
    BoundaryRowCount { rows: usize, expected: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("discrete channel system is singular at pivot {pivot}")]
    SingularSystem { pivot: usize },

    #[error("steady residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("energy grew from {initial:e} to {observed:e}: instability")]
    EnergyBlowUp { initial: f64, observed: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Bad input rather than a failed numerical check.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidTheory(_)
                | Error::AxisMismatch { .. }
                | Error::MissingMoment(_)
                | Error::InvalidConfig(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
