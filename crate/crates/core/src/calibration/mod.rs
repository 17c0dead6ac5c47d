//! Calibration error estimation.
//!
//! Binning schemes, the plug-in estimators (ECE and RMSCE), the
//! bias-corrected RMSCE, the monotonic bin-count search and loess
//! reliability curves. [`drmsce`] combines equal-mass binning, bin-count
//! search with at least ten samples per bin, and the bias correction.

mod binning;
mod estimators;
pub mod loess;
mod search;

use serde::{Deserialize, Serialize};

pub use binning::{bin_samples, BinnedCalibration, BinningScheme, CalibrationBin};
pub use estimators::{debiased_rmsce, ece, rmsce};
pub use loess::reliability_curve;
pub use search::{max_monotonic_bins, BinSearch, DEFAULT_MIN_PER_BIN};

pub(crate) use binning::bin_view;
pub(crate) use loess::{loess_on_grid, score_grid};

use crate::error::{MetricError, MetricResult};
use crate::sample::{SampleView, SortedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    EceL1,
    Rmsce,
    DebiasedRmsce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum BinPolicy {
    Fixed {
        n_bins: usize,
    },
    AdaptiveSearch {
        min_per_bin: usize,
        #[serde(default)]
        search: BinSearch,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CalibrationEstimatorConfig {
    pub binning: BinningScheme,
    pub estimator: Estimator,
    #[serde(flatten)]
    pub bin_policy: BinPolicy,
}

/// An estimate together with the number of bins actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationValue {
    pub value: f64,
    pub n_bins: usize,
}

impl CalibrationEstimatorConfig {
    pub const fn fixed(binning: BinningScheme, estimator: Estimator, n_bins: usize) -> Self {
        CalibrationEstimatorConfig {
            binning,
            estimator,
            bin_policy: BinPolicy::Fixed { n_bins },
        }
    }

    pub const fn searched(binning: BinningScheme, estimator: Estimator, min_per_bin: usize) -> Self {
        CalibrationEstimatorConfig {
            binning,
            estimator,
            bin_policy: BinPolicy::AdaptiveSearch {
                min_per_bin,
                search: BinSearch::Bisection,
            },
        }
    }

    /// Debiased RMSCE on equal-mass bins with bin-count search.
    pub const fn drmsce() -> Self {
        Self::searched(BinningScheme::EqualMass, Estimator::DebiasedRmsce, DEFAULT_MIN_PER_BIN)
    }

    pub fn validate(&self) -> MetricResult<()> {
        match self.bin_policy {
            BinPolicy::Fixed { n_bins } if n_bins < 1 => Err(MetricError::InvalidParameter(
                "fixed bin count must be at least 1".into(),
            )),
            BinPolicy::AdaptiveSearch { min_per_bin, .. }
                if min_per_bin < 2 && self.estimator == Estimator::DebiasedRmsce =>
            {
                Err(MetricError::InvalidParameter(
                    "debiased estimator needs min_per_bin >= 2".into(),
                ))
            }
            BinPolicy::AdaptiveSearch { min_per_bin, .. } if min_per_bin < 1 => {
                Err(MetricError::InvalidParameter("min_per_bin must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Smallest sample count at which this estimator can be applied.
    pub fn min_samples(&self) -> usize {
        match self.bin_policy {
            BinPolicy::Fixed { n_bins } => n_bins,
            BinPolicy::AdaptiveSearch { min_per_bin, .. } => min_per_bin,
        }
    }

    pub fn evaluate(&self, scores: &[f64], outcomes: &[bool]) -> MetricResult<CalibrationValue> {
        let sample = SortedSample::new(scores, outcomes)?;
        let view = sample.view();
        view.require_unit_interval()?;
        self.evaluate_view(&view)
    }

    /// Scores of `view` are assumed to lie in `[0, 1]`.
    pub(crate) fn evaluate_view(&self, view: &SampleView<'_>) -> MetricResult<CalibrationValue> {
        self.validate()?;
        let binned = match self.bin_policy {
            BinPolicy::Fixed { n_bins } => bin_view(view, n_bins, self.binning)?,
            BinPolicy::AdaptiveSearch { min_per_bin, search } => {
                search::search_bins(view, min_per_bin, self.binning, search)?.1
            }
        };
        let value = match self.estimator {
            Estimator::EceL1 => ece(&binned),
            Estimator::Rmsce => rmsce(&binned),
            Estimator::DebiasedRmsce => debiased_rmsce(&binned)?,
        };
        Ok(CalibrationValue {
            value,
            n_bins: binned.bins.len(),
        })
    }
}

/// Debiased RMS calibration error with monotonic bin-count search.
pub fn drmsce(scores: &[f64], outcomes: &[bool]) -> MetricResult<f64> {
    CalibrationEstimatorConfig::drmsce()
        .evaluate(scores, outcomes)
        .map(|v| v.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_rate_predictor_is_calibrated() {
        let y: Vec<bool> = (0..200).map(|i| i % 4 == 0).collect();
        let s = vec![0.25; 200];
        let v = CalibrationEstimatorConfig::drmsce().evaluate(&s, &y).unwrap();
        assert_eq!(v.n_bins, 1);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn config_validation() {
        let bad = CalibrationEstimatorConfig::fixed(BinningScheme::EqualWidth, Estimator::EceL1, 0);
        assert!(bad.validate().is_err());
        let bad = CalibrationEstimatorConfig::searched(BinningScheme::EqualMass, Estimator::DebiasedRmsce, 1);
        assert!(bad.validate().is_err());
        assert!(CalibrationEstimatorConfig::drmsce().validate().is_ok());
    }

    #[test]
    fn config_serializes_flat() {
        let c = CalibrationEstimatorConfig::drmsce();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"binning":"equal-mass","estimator":"debiased-rmsce","policy":"adaptive-search","min_per_bin":10,"search":"bisection"}"#
        );
        let back: CalibrationEstimatorConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn fixed_bins_larger_than_sample_are_rejected() {
        let c = CalibrationEstimatorConfig::fixed(BinningScheme::EqualWidth, Estimator::EceL1, 15);
        assert!(matches!(
            c.evaluate(&[0.2; 10], &[true; 10]),
            Err(MetricError::TooFewSamples { needed: 15, got: 10 })
        ));
    }
}
