use thiserror::Error;

/// Errors produced by the gaitlab library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A robot description or run configuration violated an invariant.
    /// `path` is a JSON path such as `$.link_lengths[2]`.
    #[error("{path}: {message}")]
    Spec { path: String, message: String },

    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no ground contact at shape point (phi_c = {phi_c:.6}, phi_b = {phi_b:.6})")]
    NoSupport { phi_c: f64, phi_b: f64 },

    #[error(
        "force balance did not converge at shape point (phi_c = {phi_c:.6}, phi_b = {phi_b:.6}); \
         residual force {force:.3e}, torque {torque:.3e}"
    )]
    NonConvergence {
        phi_c: f64,
        phi_b: f64,
        force: f64,
        torque: f64,
    },

    #[error("connection solve failed at {} of {total} grid points", failed.len())]
    HeightField { failed: Vec<(f64, f64)>, total: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("fit did not converge: {0}")]
    FitFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn spec(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Spec {
            path: path.into(),
            message: message.into(),
        }
    }
}
