use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("amplitudes not normalized: |c1|^2 + |c2|^2 = {0}")]
    NonNormalizedAmplitudes(f64),
    #[error("gain rate g must be nonzero")]
    ZeroGain,
    #[error("n_steps must be positive")]
    NonPositiveSteps,
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("time {t} outside [0, {t_final}]")]
    TimeOutOfRange { t: f64, t_final: f64 },
    #[error("phase {0} not supported here (only 0 and pi/2)")]
    UnsupportedPhase(f64),
    #[error("mixture weights must be nonnegative and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("rejection envelope violated at {at}: density {density} > proposal {proposal}")]
    EnvelopeViolation { at: f64, density: f64, proposal: f64 },
    #[error("dt must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("branch contains no trajectories")]
    EmptyBranch,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("histogram edges must be strictly increasing with at least two entries")]
    BadEdges,
    #[error("samples are empty")]
    EmptySamples,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
