//! Test-set bootstrap: per-group resampling with replacement, percentile
//! confidence intervals and pointwise curve bands.
//!
//! Replicate `k` of stream `s` draws its multiplicities from a ChaCha stream
//! keyed by `(base_seed, s, k)`, so results never depend on how replicates
//! are scheduled across threads. Aggregation is ordered by replicate index.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{Band, CurvePoint, CurveSeries};
use crate::error::{MetricError, MetricResult};
use crate::sample::{SampleView, SortedSample};
use crate::seed::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapPlan {
    pub n_replicates: usize,
    pub ci_level: f64,
    pub base_seed: u64,
    /// Fraction of dropped replicates above which an estimate is flagged.
    pub drop_threshold: f64,
}

impl Default for BootstrapPlan {
    fn default() -> Self {
        BootstrapPlan {
            n_replicates: 200,
            ci_level: 0.95,
            base_seed: 0,
            drop_threshold: 0.5,
        }
    }
}

impl BootstrapPlan {
    pub fn validate(&self) -> MetricResult<()> {
        if self.n_replicates < 1 {
            return Err(MetricError::InvalidParameter("n_replicates must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(MetricError::InvalidParameter(format!(
                "ci_level {} not in (0, 1)",
                self.ci_level
            )));
        }
        if !(0.0..=1.0).contains(&self.drop_threshold) {
            return Err(MetricError::InvalidParameter(format!(
                "drop_threshold {} not in [0, 1]",
                self.drop_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reliability {
    Ok,
    Unreliable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub point_estimate: Option<f64>,
    pub median: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub n_replicates_used: usize,
    pub n_replicates_dropped: usize,
    pub reliability: Reliability,
    /// Reason code when the point estimate or the whole interval is missing.
    pub missing_reason: Option<String>,
}

impl MetricEstimate {
    /// Estimate without resampling.
    pub fn point_only(point: &MetricResult<f64>) -> Self {
        MetricEstimate {
            point_estimate: point.as_ref().ok().copied(),
            median: None,
            ci_lower: None,
            ci_upper: None,
            n_replicates_used: 0,
            n_replicates_dropped: 0,
            reliability: Reliability::Ok,
            missing_reason: point.as_ref().err().map(|e| e.reason_code().to_string()),
        }
    }
}

/// Multinomial multiplicities of one resample of size `n` drawn from `n`.
pub fn draw_counts<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

pub fn replicate_counts(n: usize, plan: &BootstrapPlan, stream_id: &str, replicate: usize) -> Vec<u32> {
    let mut rng = stream_rng(plan.base_seed, stream_id, replicate as u64);
    draw_counts(n, &mut rng)
}

/// Evaluates `f` on the multiplicities of every replicate, in replicate order.
pub fn run_replicates<T, F>(n: usize, plan: &BootstrapPlan, stream_id: &str, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[u32]) -> T + Sync,
{
    (0..plan.n_replicates)
        .into_par_iter()
        .map(|k| f(&replicate_counts(n, plan, stream_id, k)))
        .collect()
}

/// 1-based order-statistic rank `ceil(q m)`, clamped to `[1, m]`.
fn rank(q: f64, m: usize) -> usize {
    let r = (q * m as f64 - 1e-9).ceil();
    (r.max(1.0) as usize).min(m)
}

/// Percentile interval from sorted values: ranks `ceil(a m)` and
/// `ceil((1 - a) m)` with `a = (1 - level) / 2`, no interpolation.
pub fn percentile_interval(sorted: &[f64], level: f64) -> (f64, f64) {
    let m = sorted.len();
    let a = (1.0 - level) / 2.0;
    (sorted[rank(a, m) - 1], sorted[rank(1.0 - a, m) - 1])
}

pub fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
    }
}

/// Combines a point estimate with replicate values into an estimate.
pub fn summarize(point: &MetricResult<f64>, replicates: &[MetricResult<f64>], plan: &BootstrapPlan) -> MetricEstimate {
    let mut values: Vec<f64> = replicates.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    values.sort_by(f64::total_cmp);
    let dropped = replicates.len() - values.len();
    let flagged = replicates.is_empty() || dropped as f64 > plan.drop_threshold * replicates.len() as f64;
    let mut est = MetricEstimate::point_only(point);
    est.n_replicates_used = values.len();
    est.n_replicates_dropped = dropped;
    est.reliability = if flagged || values.is_empty() {
        Reliability::Unreliable
    } else {
        Reliability::Ok
    };
    if values.is_empty() {
        est.missing_reason
            .get_or_insert_with(|| "all_replicates_dropped".to_string());
        return est;
    }
    let med = median(&values);
    let (lo, hi) = percentile_interval(&values, plan.ci_level);
    est.median = Some(med);
    est.ci_lower = Some(lo.min(med));
    est.ci_upper = Some(hi.max(med));
    est
}

/// Bootstraps a scalar metric over the group's own samples.
pub fn bootstrap_metric<F>(sample: &SortedSample, metric: F, plan: &BootstrapPlan, stream_id: &str) -> MetricEstimate
where
    F: Fn(&SampleView<'_>) -> MetricResult<f64> + Sync,
{
    let point = metric(&sample.view());
    let reps = run_replicates(sample.len(), plan, stream_id, |w| metric(&sample.weighted(w)));
    summarize(&point, &reps, plan)
}

/// Attaches pointwise percentile bands to a curve evaluated on a fixed grid.
///
/// `center` holds the curve of the original sample on `grid` (NaN where
/// undefined; such points are omitted). Replicate curves that failed, and
/// NaN entries, are skipped per point. Bands are widened where needed so
/// that they always contain the center value.
pub fn curve_with_bands(
    x_label: &str,
    y_label: &str,
    grid: &[f64],
    center: &[f64],
    replicates: &[MetricResult<Vec<f64>>],
    plan: &BootstrapPlan,
) -> CurveSeries {
    let mut curve = CurveSeries::new(x_label, y_label);
    let mut column = Vec::with_capacity(replicates.len());
    for (i, (&x, &y)) in grid.iter().zip(center).enumerate() {
        if !y.is_finite() {
            continue;
        }
        column.clear();
        column.extend(
            replicates
                .iter()
                .filter_map(|r| r.as_ref().ok())
                .map(|v| v[i])
                .filter(|v| v.is_finite()),
        );
        let band = (!column.is_empty()).then(|| {
            column.sort_by(f64::total_cmp);
            let (lo, hi) = percentile_interval(&column, plan.ci_level);
            Band {
                lower: lo.min(y),
                upper: hi.max(y),
            }
        });
        curve.points.push(CurvePoint { x, y, band });
    }
    curve
}

/// Bootstraps a curve evaluated on a fixed grid; the center line is the
/// curve of the original sample.
pub fn bootstrap_curve<F>(
    sample: &SortedSample,
    grid: &[f64],
    labels: (&str, &str),
    curve: F,
    plan: &BootstrapPlan,
    stream_id: &str,
) -> MetricResult<CurveSeries>
where
    F: Fn(&SampleView<'_>) -> MetricResult<Vec<f64>> + Sync,
{
    let center = curve(&sample.view())?;
    let reps = run_replicates(sample.len(), plan, stream_id, |w| curve(&sample.weighted(w)));
    Ok(curve_with_bands(labels.0, labels.1, grid, &center, &reps, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrimination::auroc_view;

    fn mean_outcome(v: &SampleView<'_>) -> MetricResult<f64> {
        Ok(v.positives() as f64 / v.total() as f64)
    }

    #[test]
    fn percentile_ranks() {
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(percentile_interval(&v, 0.95), (5.0, 195.0));
        assert_eq!(median(&v), 100.5);
        let v: Vec<f64> = (1..=40).map(f64::from).collect();
        // ceil(0.025 * 40) = 1, ceil(0.975 * 40) = 39
        assert_eq!(percentile_interval(&v, 0.95), (1.0, 39.0));
        assert_eq!(percentile_interval(&[3.0], 0.95), (3.0, 3.0));
    }

    #[test]
    fn degenerate_distribution() {
        let s = SortedSample::new(&[0.1, 0.2, 0.3, 0.4], &[true; 4]).unwrap();
        let est = bootstrap_metric(&s, mean_outcome, &BootstrapPlan::default(), "g");
        assert_eq!(est.point_estimate, Some(1.0));
        assert_eq!(est.median, Some(1.0));
        assert_eq!((est.ci_lower, est.ci_upper), (Some(1.0), Some(1.0)));
        assert_eq!(est.n_replicates_used, 200);
        assert_eq!(est.reliability, Reliability::Ok);
    }

    #[test]
    fn single_positive_drops_replicates() {
        let s = SortedSample::new(&[0.1, 0.2, 0.3, 0.4, 0.9], &[false, false, false, false, true]).unwrap();
        let plan = BootstrapPlan {
            base_seed: 11,
            ..Default::default()
        };
        let est = bootstrap_metric(&s, auroc_view, &plan, "tiny");
        // oracle: count replicates drawing the positive zero or five times
        let expected_dropped = (0..plan.n_replicates)
            .filter(|&k| {
                let c = replicate_counts(5, &plan, "tiny", k);
                c[4] == 0 || c[4] == 5
            })
            .count();
        assert!(expected_dropped > 0);
        assert_eq!(est.n_replicates_dropped, expected_dropped);
        assert_eq!(est.n_replicates_used + est.n_replicates_dropped, 200);
    }

    #[test]
    fn all_dropped_is_missing_and_unreliable() {
        let s = SortedSample::new(&[0.1, 0.2], &[true, true]).unwrap();
        let est = bootstrap_metric(&s, auroc_view, &BootstrapPlan::default(), "x");
        assert_eq!(est.point_estimate, None);
        assert_eq!(est.median, None);
        assert_eq!(est.reliability, Reliability::Unreliable);
        assert_eq!(est.missing_reason.as_deref(), Some("single_class"));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let scores: Vec<f64> = (0..300).map(|i| (i as f64 * 0.618).fract()).collect();
        let y: Vec<bool> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| (s + (i as f64 * 0.377).fract()) > 0.9)
            .collect();
        let s = SortedSample::new(&scores, &y).unwrap();
        let plan = BootstrapPlan {
            base_seed: 3,
            ..Default::default()
        };
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| bootstrap_metric(&s, auroc_view, &plan, "grp"))
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
        assert_eq!(a, bootstrap_metric(&s, auroc_view, &plan, "grp"));
        assert_ne!(a, bootstrap_metric(&s, auroc_view, &plan, "other"));
    }

    #[test]
    fn constant_curve_has_zero_width_bands() {
        let s = SortedSample::new(&[0.1, 0.5, 0.9], &[true, false, true]).unwrap();
        let grid = [0.0, 0.5, 1.0];
        let c = bootstrap_curve(
            &s,
            &grid,
            ("x", "y"),
            |_| Ok(vec![0.3; 3]),
            &BootstrapPlan::default(),
            "c",
        )
        .unwrap();
        for p in &c.points {
            assert_eq!(p.band, Some(Band { lower: 0.3, upper: 0.3 }));
        }
        assert!(c.check_invariants().is_ok());
    }

    #[test]
    fn plan_validation() {
        assert!(BootstrapPlan::default().validate().is_ok());
        assert!(BootstrapPlan {
            n_replicates: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BootstrapPlan {
            ci_level: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
