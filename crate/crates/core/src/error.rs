use thiserror::Error;

/// Crate-wide error type. Diagnostic payloads are stored as `f64` so the
/// enum stays independent of the scalar parameter.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("truncation M = {m} is smaller than the highest potential mode {mode}")]
    Truncation { m: usize, mode: u32 },

    #[error("no Dirac degeneracy at k = pi: gap {gap:.3e} exceeds tolerance {tol:.1e}")]
    GapOpen { gap: f64, tol: f64 },

    #[error("eigenspace at k = pi has dimension > 2 near mu = {mu:.6}: {0}", .detail)]
    ExtraDegeneracy { mu: f64, detail: String },

    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("gauge error: {0}")]
    GaugeError(String),

    #[error("step size dt = {dt:.3e} violates the stability bound {limit:.3e}")]
    StepSize { dt: f64, limit: f64 },

    #[error("norm blow-up at t = {t:.6}: diagnostic grew by factor {factor:.3e}")]
    BlowUp { t: f64, factor: f64 },

    #[error("solvability residual {residual:.3e} exceeds {bound:.3e}: envelope does not satisfy the NLD")]
    Solvability { residual: f64, bound: f64 },

    #[error("incommensurate grids: {0}")]
    Incommensurate(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the CLI: 2 for a missing Dirac point,
    /// 3 for solver blow-up, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GapOpen { .. } => 2,
            Error::BlowUp { .. } => 3,
            _ => 1,
        }
    }
}
