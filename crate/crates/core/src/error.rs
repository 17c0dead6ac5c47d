//! Error type shared by the metric modules.
//!
//! Every variant maps to a stable reason code so that undefined metrics can
//! be carried through reports as explicit missing values.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("scores and outcomes differ in length ({scores} vs {outcomes})")]
    LengthMismatch { scores: usize, outcomes: usize },
    #[error("no samples")]
    Empty,
    #[error("score {value} at position {index} is not a finite value in [0, 1]")]
    InvalidScore { index: usize, value: f64 },
    #[error("metric needs both classes (positives: {positives}, negatives: {negatives})")]
    SingleClass { positives: u64, negatives: u64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: u64, got: u64 },
    #[error("bin {bin} holds {count} samples, the estimator needs at least {needed}")]
    BinTooSmall { bin: usize, count: u64, needed: u64 },
    #[error("no positive outcomes in the population")]
    NoPositives,
    #[error("group has no positive outcomes")]
    GroupWithoutPositives,
    #[error("no threshold draws fall inside the threshold range")]
    NoThresholdsInRange,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl MetricError {
    /// Stable machine-readable code used for missing report cells.
    pub fn reason_code(&self) -> &'static str {
        match self {
            MetricError::LengthMismatch { .. } => "length_mismatch",
            MetricError::Empty => "empty",
            MetricError::InvalidScore { .. } => "invalid_score",
            MetricError::SingleClass { .. } => "single_class",
            MetricError::TooFewSamples { .. } => "too_few_samples",
            MetricError::BinTooSmall { .. } => "bin_too_small",
            MetricError::NoPositives => "no_positives",
            MetricError::GroupWithoutPositives => "group_without_positives",
            MetricError::NoThresholdsInRange => "no_thresholds_in_range",
            MetricError::InvalidParameter(_) => "invalid_parameter",
        }
    }
}

pub type MetricResult<T> = Result<T, MetricError>;
