use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("tripod preparation requires the pure ground state")]
    NotGroundState,

    #[error("invalid clock frequencies f1 = {f1} Hz, f2 = {f2} Hz: clock 2 must have a larger transition frequency than clock 1 and both must be positive")]
    FrequencyOrder { f1: f64, f2: f64 },

    #[error("pulse angle {angle} must lie in [0, 2π] and phase {phase} in [0, 2π)")]
    InvalidPulse { angle: f64, phase: f64 },

    #[error("{what} must be non-negative and finite, got {value}")]
    NegativeTime { what: &'static str, value: f64 },

    #[error("phase scan needs at least {min} phases, got {got}")]
    TooFewPhases { got: usize, min: usize },

    #[error("fringe design matrix is rank deficient (duplicate phases)")]
    RankDeficient,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("fringe fit failed at t = {t} s: {source}")]
    FitAt {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("least squares did not converge after {iterations} iterations (cost {cost:e}, last step {last_step:e})")]
    NonConvergence {
        iterations: usize,
        cost: f64,
        last_step: f64,
    },

    #[error("fractional shift |eps| = {eps:e} too large for the lowest-order redshift (limit {limit:e})")]
    ShiftTooLarge { eps: f64, limit: f64 },

    #[error("invalid probabilities {probs:?}: {reason}")]
    InvalidProbabilities {
        probs: [f64; 3],
        reason: &'static str,
    },

    #[error("curve spans {span_periods:.3} modulation periods, {required} required")]
    InsufficientSpan { span_periods: f64, required: f64 },

    #[error("found {found} visibility nulls, {requested} requested")]
    TooFewNulls { found: usize, requested: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
