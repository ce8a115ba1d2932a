use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("occupation vector has {found} modes, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {mode} out of range for a {modes}-mode state")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("squeezing too strong for series convergence (tanh r = {tanh_r})")]
    Unconvergent { tanh_r: f64 },

    #[error("pair-creation series exceeded k_max = {k_max} (best tail bound {tail_bound:e})")]
    KMaxExceeded { k_max: usize, tail_bound: f64 },

    #[error("matrix exponential did not converge (residual {residual:e})")]
    ExpmNonConvergence { residual: f64 },

    #[error("{kind} expects {expected} parameters, got {found}")]
    Arity {
        kind: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("objective failed at {at:?}: {source}")]
    Objective {
        at: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of a numerical series or iteration to converge.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Unconvergent { .. } | Error::KMaxExceeded { .. } | Error::ExpmNonConvergence { .. } => true,
            Error::Objective { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
