use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time step must be positive (t_final = {t_final}, n_steps = {n_steps})")]
    NonPositiveDt { t_final: f64, n_steps: usize },
    #[error("rate `{name}` must be finite and non-negative, got {value}")]
    RateNegative { name: &'static str, value: f64 },
    #[error("efficiency must lie in (0, 1], got {0}")]
    EfficiencyOutOfRange(f64),
    #[error("threshold must lie in [0, 1], got {0}")]
    ThresholdOutOfRange(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("Bloch vector length {0} exceeds the unit ball")]
    BlochOutOfBall(f64),
    #[error("matrix is not a valid density matrix: {0}")]
    InvalidDensity(String),
    #[error("numerical divergence at step {step}")]
    NumericalDivergence { step: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("PSD repair produced a zero-trace matrix")]
    ZeroTrace,
    #[error("unnormalized filter weight underflow (log trace {0})")]
    WeightUnderflow(f64),
    #[error("unnormalized filter weight overflow (log trace {0})")]
    WeightOverflow(f64),
    #[error("EKF covariance eigenvalue {0} exceeds the blow-up limit")]
    CovarianceBlowup(f64),
    #[error("equatorial phase undefined for coherence {0}")]
    PhaseUndefined(f64),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("no accepted trajectories")]
    EmptyAcceptedSet,
    #[error("security margin {epsilon} exceeds threshold {s_th}")]
    MarginExceedsThreshold { s_th: f64, epsilon: f64 },
    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("fitted drift is not restoring (mu = {0})")]
    NonRestoringDrift(f64),
}
