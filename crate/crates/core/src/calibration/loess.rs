//! Local-linear loess smoothing of outcomes on scores (reliability curves).

use crate::curve::{linspace, CurveSeries};
use crate::error::{MetricError, MetricResult};
use crate::sample::{SampleView, SortedSample};

pub const DEFAULT_SPAN: f64 = 0.75;
pub const DEFAULT_GRID_SIZE: usize = 101;
pub const MIN_LOESS_SAMPLES: u64 = 10;

pub const RELIABILITY_X: &str = "predicted_risk";
pub const RELIABILITY_Y: &str = "observed_frequency";

/// Loess reliability curve on `grid_size` evenly spaced points spanning the
/// observed score range. Fitted values are clamped to `[0, 1]`.
pub fn reliability_curve(scores: &[f64], outcomes: &[bool], span: f64, grid_size: usize) -> MetricResult<CurveSeries> {
    let sample = SortedSample::new(scores, outcomes)?;
    let view = sample.view();
    view.require_unit_interval()?;
    if grid_size < 2 {
        return Err(MetricError::InvalidParameter("grid_size must be at least 2".into()));
    }
    let grid = score_grid(&view, grid_size);
    let fitted = loess_on_grid(&view, span, &grid)?;
    Ok(CurveSeries::from_xy(
        RELIABILITY_X,
        RELIABILITY_Y,
        grid.into_iter().zip(fitted),
    ))
}

pub(crate) fn score_grid(view: &SampleView<'_>, grid_size: usize) -> Vec<f64> {
    let lo = view.min_score().unwrap_or(0.0);
    let hi = view.max_score().unwrap_or(1.0);
    linspace(lo, hi, grid_size)
}

/// Largest number of support points the smoother works on. Larger samples
/// are summarized by equal-width score micro-bins (count-weighted mean
/// score, count and positives per bin) before fitting.
pub const MAX_SUPPORT_POINTS: usize = 1024;

/// Score-sorted weighted points: tied scores merged, zero weights removed.
struct Support {
    score: Vec<f64>,
    count: Vec<f64>,
    positives: Vec<f64>,
}

impl Support {
    fn new(view: &SampleView<'_>) -> Self {
        let mut sup = Support {
            score: Vec::new(),
            count: Vec::new(),
            positives: Vec::new(),
        };
        for (a, b) in view.runs() {
            let (w, p) = view.range_counts(a, b);
            if w > 0 {
                sup.score.push(view.score(a));
                sup.count.push(w as f64);
                sup.positives.push(p as f64);
            }
        }
        if sup.score.len() > MAX_SUPPORT_POINTS {
            sup = sup.compress(MAX_SUPPORT_POINTS);
        }
        sup
    }

    fn compress(&self, n_bins: usize) -> Self {
        let lo = self.score[0];
        let width = (self.score[self.score.len() - 1] - lo) / n_bins as f64;
        let mut out = Support {
            score: Vec::with_capacity(n_bins),
            count: Vec::with_capacity(n_bins),
            positives: Vec::with_capacity(n_bins),
        };
        let mut current = usize::MAX;
        let mut sum_score = 0.0;
        for i in 0..self.score.len() {
            let bin = (((self.score[i] - lo) / width) as usize).min(n_bins - 1);
            if bin != current {
                if current != usize::MAX {
                    let c = out.count.last_mut().expect("open bin");
                    out.score.push(sum_score / *c);
                }
                current = bin;
                sum_score = 0.0;
                out.count.push(0.0);
                out.positives.push(0.0);
            }
            sum_score += self.count[i] * self.score[i];
            *out.count.last_mut().expect("open bin") += self.count[i];
            *out.positives.last_mut().expect("open bin") += self.positives[i];
        }
        let c = out.count.last().expect("nonempty");
        out.score.push(sum_score / c);
        out
    }

    fn len(&self) -> usize {
        self.score.len()
    }
}

/// Evaluates the smoother at each grid point.
pub(crate) fn loess_on_grid(view: &SampleView<'_>, span: f64, grid: &[f64]) -> MetricResult<Vec<f64>> {
    if !(span > 0.0 && span <= 1.0) {
        return Err(MetricError::InvalidParameter(format!("span {span} not in (0, 1]")));
    }
    let n = view.total();
    if n < MIN_LOESS_SAMPLES {
        return Err(MetricError::TooFewSamples {
            needed: MIN_LOESS_SAMPLES,
            got: n,
        });
    }
    let k = ((span * n as f64).ceil()).clamp(1.0, n as f64);
    let support = Support::new(view);
    Ok(grid.iter().map(|&x| fit_at(&support, x, k).clamp(0.0, 1.0)).collect())
}

/// Local-linear fit at `x` over the nearest points holding `k` samples,
/// with tricube weights scaled to the farthest of them.
fn fit_at(sup: &Support, x: f64, k: f64) -> f64 {
    let scores = &sup.score;
    let m = sup.len();
    // grow [l, r) around x until it holds k samples
    let mut l = scores.partition_point(|&s| s < x);
    let mut r = l;
    let mut acc = 0.0;
    let mut radius = 0.0f64;
    while acc < k {
        let take_left = match (l > 0, r < m) {
            (true, true) => x - scores[l - 1] <= scores[r] - x,
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        let i = if take_left {
            l -= 1;
            l
        } else {
            r += 1;
            r - 1
        };
        acc += sup.count[i];
        radius = radius.max((scores[i] - x).abs());
    }

    let (mut sw, mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let window = scores[l..r].iter().zip(&sup.count[l..r]).zip(&sup.positives[l..r]);
    for ((&s, &count), &positives) in window {
        let u = s - x;
        let kernel = if radius == 0.0 {
            1.0
        } else {
            let t = (u.abs() / radius).min(1.0);
            let v = 1.0 - t * t * t;
            v * v * v
        };
        let w = count * kernel;
        let yw = positives * kernel;
        sw += w;
        su += w * u;
        suu += w * u * u;
        sy += yw;
        suy += yw * u;
    }
    if sw <= 0.0 {
        // only the farthest points, at zero kernel weight
        let c: f64 = sup.count[l..r].iter().sum();
        let p: f64 = sup.positives[l..r].iter().sum();
        return p / c;
    }
    let denom = sw * suu - su * su;
    if suu <= 0.0 || denom <= 1e-12 * sw * suu {
        return sy / sw;
    }
    (sy * suu - su * suy) / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_outcomes_give_constant_curve() {
        let s: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let c = reliability_curve(&s, &[true; 50], DEFAULT_SPAN, 11).unwrap();
        assert_eq!(c.len(), 11);
        assert!(c.points.iter().all(|p| (p.y - 1.0).abs() < 1e-12));
        assert_eq!(c.points[0].x, 0.0);
        assert_eq!(c.points[10].x, 1.0);
    }

    #[test]
    fn alternating_outcomes_fit_near_one_half() {
        let s: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let y: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let c = reliability_curve(&s, &y, 1.0, 3).unwrap();
        assert!((c.points[1].y - 0.5).abs() < 0.05);
    }

    #[test]
    fn identical_scores_fall_back_to_mean() {
        let y: Vec<bool> = (0..20).map(|i| i < 5).collect();
        let c = reliability_curve(&[0.4; 20], &y, 0.5, 2).unwrap();
        assert!(c.points.iter().all(|p| (p.y - 0.25).abs() < 1e-12));
    }

    #[test]
    fn parameter_checks() {
        let s: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let y = vec![true; 20];
        assert!(reliability_curve(&s, &y, 0.0, 5).is_err());
        assert!(reliability_curve(&s, &y, 1.5, 5).is_err());
        assert!(reliability_curve(&s, &y, 0.5, 1).is_err());
        assert!(matches!(
            reliability_curve(&s[..5], &y[..5], 0.5, 5),
            Err(MetricError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn large_samples_are_summarized_closely() {
        let n = 5000;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 * 0.754877666).fract()).collect();
        let y: Vec<bool> = s
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64 * 0.569840291).fract() < v)
            .collect();
        let sample = SortedSample::new(&s, &y).unwrap();
        let view = sample.view();
        let grid = score_grid(&view, 21);
        let full = Support::new(&view);
        assert_eq!(full.len(), MAX_SUPPORT_POINTS);
        assert_eq!(full.count.iter().sum::<f64>(), n as f64);
        // the exact smoother on every distinct score
        let mut exact = Support {
            score: Vec::new(),
            count: Vec::new(),
            positives: Vec::new(),
        };
        for (i, &v) in sample.scores().iter().enumerate() {
            exact.score.push(v);
            exact.count.push(1.0);
            exact.positives.push(if sample.outcomes()[i] { 1.0 } else { 0.0 });
        }
        let k = (0.75 * n as f64).ceil();
        for &x in &grid {
            assert!((fit_at(&full, x, k) - fit_at(&exact, x, k)).abs() < 2e-3);
        }
    }

    #[test]
    fn fitted_values_are_clamped() {
        let s: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let y: Vec<bool> = (0..30).map(|i| i >= 15).collect();
        let c = reliability_curve(&s, &y, 0.2, 50).unwrap();
        assert!(c.points.iter().all(|p| (0.0..=1.0).contains(&p.y)));
    }
}
