//! Group-wise auditing of risk scores: calibration, discrimination and
//! ranking metrics with bootstrap uncertainty, plus synthetic benchmarks.

pub mod audit;
pub mod bench;
pub mod calibration;
pub mod curve;
pub mod data;
pub mod discrimination;
pub mod error;
mod exact_sum;
pub mod groups;
pub mod ranking;
pub mod resampling;
pub mod sample;
pub mod seed;

pub use calibration::{
    debiased_rmsce, drmsce, ece, max_monotonic_bins, reliability_curve, rmsce, BinPolicy, BinSearch, BinningScheme,
    CalibrationEstimatorConfig, Estimator,
};
pub use curve::{CurvePoint, CurveSeries};
pub use data::{Attribute, AttributeSchema, Dataset, RiskRecord};
pub use discrimination::{auprg, auroc, prg_curve, roc_curve};
pub use error::{MetricError, MetricResult};
pub use groups::{enumerate_groups, GroupDefinition, GroupIndex};
pub use ranking::{eur, representation_curve, ThresholdRange};
pub use resampling::{BootstrapPlan, MetricEstimate};
pub use sample::{SampleView, SortedSample};
