use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// config errors exit 2, numeric failures 3, insufficient samples 4.
#[derive(Debug, Error)]
pub enum CgError {
    #[error("config error: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("gradient of the reaction coordinate vanishes at the evaluation point (violates [H1])")]
    VanishingGradient,

    #[error("level-set parametrization required but not available for this reaction coordinate")]
    MissingChart,

    #[error("level set is empty at this temperature: normalization integral underflowed")]
    EmptyLevelSet,

    #[error("non-finite state at step {step}: {what}")]
    NonFinite { step: u64, what: String },

    #[error("state diverged at step {step} (|coordinate| > {bound:e})")]
    Diverged { step: u64, bound: f64 },

    #[error("constraint projection failed to converge at step {step}")]
    NewtonFailed { step: u64 },

    #[error("insufficient samples: collected {got} of {want} within the step cap")]
    InsufficientSamples { got: usize, want: usize },

    #[error("trajectory exceeded the step cap of {cap} steps (censored)")]
    StepCapExceeded { cap: u64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CgError {
    /// Exit code category used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            CgError::Config(_) | CgError::Model(_) => 2,
            CgError::InsufficientSamples { .. } => 4,
            CgError::Io(_) => 1,
            _ => 3,
        }
    }
}
