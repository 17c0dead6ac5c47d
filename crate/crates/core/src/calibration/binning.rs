use serde::{Deserialize, Serialize};

use crate::error::{MetricError, MetricResult};
use crate::sample::{SampleView, SortedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinningScheme {
    /// Bin `b` (1-based) covers `[(b-1)/B, b/B)`, the last bin is closed.
    EqualWidth,
    /// Quantile split of the score-sorted samples; tied scores stay together.
    EqualMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub count: u64,
    pub mean_prediction: f64,
    pub mean_outcome: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCalibration {
    /// Nonempty bins ordered by mean prediction.
    pub bins: Vec<CalibrationBin>,
    pub total_count: u64,
    pub scheme: BinningScheme,
    pub n_bins_requested: usize,
}

impl BinnedCalibration {
    pub fn is_monotonic(&self) -> bool {
        self.bins.windows(2).all(|w| w[0].mean_outcome <= w[1].mean_outcome)
    }

    pub fn min_count(&self) -> u64 {
        self.bins.iter().map(|b| b.count).min().unwrap_or(0)
    }
}

/// Partitions samples into calibration bins.
///
/// Scores must lie in `[0, 1]` and `1 <= n_bins <= scores.len()`. Empty
/// equal-width bins are dropped; equal-mass bins never split tied scores, so
/// fewer bins than requested may be realized.
pub fn bin_samples(
    scores: &[f64],
    outcomes: &[bool],
    n_bins: usize,
    scheme: BinningScheme,
) -> MetricResult<BinnedCalibration> {
    let sample = SortedSample::new(scores, outcomes)?;
    let view = sample.view();
    view.require_unit_interval()?;
    bin_view(&view, n_bins, scheme)
}

pub(crate) fn bin_view(view: &SampleView<'_>, n_bins: usize, scheme: BinningScheme) -> MetricResult<BinnedCalibration> {
    BinLayout::new(view, scheme).bin(n_bins)
}

/// Prefix counts of a view, built once and reused for many bin counts.
pub(crate) struct BinLayout<'v, 'a> {
    view: &'v SampleView<'a>,
    scheme: BinningScheme,
    cum_weight: Vec<u64>,
    cum_positive: Vec<u64>,
}

impl<'v, 'a> BinLayout<'v, 'a> {
    pub(crate) fn new(view: &'v SampleView<'a>, scheme: BinningScheme) -> Self {
        let n = view.positions();
        let mut cum_weight = Vec::with_capacity(n + 1);
        let mut cum_positive = Vec::with_capacity(n + 1);
        let (mut w, mut p) = (0u64, 0u64);
        cum_weight.push(0);
        cum_positive.push(0);
        for i in 0..n {
            let wi = view.weight(i);
            w += wi;
            if view.outcome(i) {
                p += wi;
            }
            cum_weight.push(w);
            cum_positive.push(p);
        }
        BinLayout {
            view,
            scheme,
            cum_weight,
            cum_positive,
        }
    }

    fn check(&self, n_bins: usize) -> MetricResult<()> {
        if n_bins < 1 {
            return Err(MetricError::InvalidParameter("n_bins must be at least 1".into()));
        }
        let total = self.view.total();
        if (n_bins as u64) > total {
            return Err(MetricError::TooFewSamples {
                needed: n_bins as u64,
                got: total,
            });
        }
        Ok(())
    }

    /// Position ranges of the nonempty bins.
    fn ranges(&self, n_bins: usize) -> Vec<(usize, usize)> {
        let mut r = match self.scheme {
            BinningScheme::EqualWidth => self.equal_width_ranges(n_bins),
            BinningScheme::EqualMass => self.equal_mass_ranges(n_bins),
        };
        r.retain(|&(a, b)| self.cum_weight[b] > self.cum_weight[a]);
        r
    }

    /// (count, positives) of every nonempty bin.
    pub(crate) fn counts(&self, n_bins: usize) -> MetricResult<Vec<(u64, u64)>> {
        self.check(n_bins)?;
        Ok(self
            .ranges(n_bins)
            .into_iter()
            .map(|(a, b)| {
                (
                    self.cum_weight[b] - self.cum_weight[a],
                    self.cum_positive[b] - self.cum_positive[a],
                )
            })
            .collect())
    }

    pub(crate) fn bin(&self, n_bins: usize) -> MetricResult<BinnedCalibration> {
        self.check(n_bins)?;
        let view = self.view;
        let bins = self
            .ranges(n_bins)
            .into_iter()
            .map(|(start, end)| {
                let count = self.cum_weight[end] - self.cum_weight[start];
                let positives = self.cum_positive[end] - self.cum_positive[start];
                let mut sum_pred = 0.0;
                for i in start..end {
                    let w = view.weight(i);
                    if w > 0 {
                        sum_pred += w as f64 * view.score(i);
                    }
                }
                CalibrationBin {
                    count,
                    mean_prediction: sum_pred / count as f64,
                    mean_outcome: positives as f64 / count as f64,
                }
            })
            .collect();
        Ok(BinnedCalibration {
            bins,
            total_count: view.total(),
            scheme: self.scheme,
            n_bins_requested: n_bins,
        })
    }

    fn equal_width_ranges(&self, n_bins: usize) -> Vec<(usize, usize)> {
        let scores = self.view.sample().scores();
        let mut ranges = Vec::with_capacity(n_bins);
        let mut start = 0;
        for b in 0..n_bins {
            let end = if b + 1 == n_bins {
                scores.len()
            } else {
                start + scores[start..].partition_point(|&s| width_bin(s, n_bins) <= b)
            };
            ranges.push((start, end));
            start = end;
        }
        ranges
    }

    /// Cuts at `floor(k N / B)` in the expanded sorted sample; a cut inside
    /// a run of ties moves to the nearer run edge (the upper edge on a draw).
    fn equal_mass_ranges(&self, n_bins: usize) -> Vec<(usize, usize)> {
        let cum = &self.cum_weight;
        let bounds = self.view.sample().run_bounds();
        let total = self.view.total();

        let mut cuts: Vec<u64> = Vec::with_capacity(n_bins + 1);
        cuts.push(0);
        for k in 1..n_bins as u64 {
            // split before the t-th (0-based) sample of the expanded sorted sample
            let t = k * total / n_bins as u64;
            let pos = cum.partition_point(|&c| c <= t) - 1;
            let r = bounds.partition_point(|&b| b <= pos) - 1;
            let (a, b) = (cum[bounds[r]], cum[bounds[r + 1]]);
            let cut = if t > a {
                if t - a < b - t {
                    a
                } else {
                    b
                }
            } else {
                t
            };
            cuts.push(cut.max(*cuts.last().unwrap()));
        }
        cuts.push(total);
        cuts.dedup();

        let to_pos = |c: u64| cum.partition_point(|&x| x < c);
        cuts.windows(2)
            .map(|w| {
                let end = if w[1] == total {
                    self.view.positions()
                } else {
                    to_pos(w[1])
                };
                (to_pos(w[0]), end)
            })
            .collect()
    }
}

fn width_bin(score: f64, n_bins: usize) -> usize {
    ((score * n_bins as f64).floor() as usize).min(n_bins - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_width_symmetric_split() {
        let b = bin_samples(
            &[0.2, 0.2, 0.8, 0.8],
            &[false, false, true, true],
            2,
            BinningScheme::EqualWidth,
        )
        .unwrap();
        assert_eq!(b.bins.len(), 2);
        assert_eq!(
            (b.bins[0].count, b.bins[0].mean_prediction, b.bins[0].mean_outcome),
            (2, 0.2, 0.0)
        );
        assert_eq!(
            (b.bins[1].count, b.bins[1].mean_prediction, b.bins[1].mean_outcome),
            (2, 0.8, 1.0)
        );
    }

    #[test]
    fn equal_width_edges() {
        // 0.5 opens the second bin, 1.0 falls into the closed last bin
        let b = bin_samples(&[0.0, 0.4999, 0.5, 1.0], &[false; 4], 2, BinningScheme::EqualWidth).unwrap();
        assert_eq!(b.bins.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 2]);
    }

    #[test]
    fn equal_width_drops_empty_bins_keeps_total() {
        let b = bin_samples(&[0.05, 0.06, 0.95], &[false, true, true], 10, BinningScheme::EqualWidth);
        // 10 bins need at least 10 samples
        assert!(matches!(b, Err(MetricError::TooFewSamples { needed: 10, got: 3 })));
        let b = bin_samples(&[0.05, 0.06, 0.95], &[false, true, true], 3, BinningScheme::EqualWidth).unwrap();
        assert_eq!(b.bins.len(), 2);
        assert_eq!(b.total_count, 3);
    }

    #[test]
    fn equal_mass_median_split() {
        let b = bin_samples(
            &[0.9, 0.1, 0.3, 0.2],
            &[true, false, false, true],
            2,
            BinningScheme::EqualMass,
        )
        .unwrap();
        assert_eq!(b.bins.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 2]);
        assert!((b.bins[0].mean_prediction - 0.15).abs() < 1e-15);
        assert!((b.bins[1].mean_prediction - 0.6).abs() < 1e-15);
    }

    #[test]
    fn equal_mass_never_splits_ties() {
        let b = bin_samples(&[0.5; 4], &[true, false, true, false], 2, BinningScheme::EqualMass).unwrap();
        assert_eq!(b.bins.len(), 1);
        assert_eq!(b.bins[0].count, 4);
        assert_eq!(b.n_bins_requested, 2);

        // boundary at 3 sits inside the run [2, 5): nearer edge is 2
        let s = [0.1, 0.2, 0.4, 0.4, 0.4, 0.7];
        let b = bin_samples(&s, &[false; 6], 2, BinningScheme::EqualMass).unwrap();
        assert_eq!(b.bins.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 4]);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            bin_samples(&[0.1], &[true], 0, BinningScheme::EqualMass),
            Err(MetricError::InvalidParameter(_))
        ));
        assert!(matches!(
            bin_samples(&[0.1, 1.2], &[true, false], 1, BinningScheme::EqualMass),
            Err(MetricError::InvalidScore { index: 1, .. })
        ));
    }

    fn arb_instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, usize)> {
        (1usize..120).prop_flat_map(|n| {
            (
                proptest::collection::vec(prop_oneof![0.0f64..=1.0, (0u8..5).prop_map(|k| f64::from(k) / 4.0)], n),
                proptest::collection::vec(any::<bool>(), n),
                1..=n,
            )
        })
    }

    proptest! {
        #[test]
        fn partition_invariants((s, y, k) in arb_instance()) {
            for scheme in [BinningScheme::EqualWidth, BinningScheme::EqualMass] {
                let b = bin_samples(&s, &y, k, scheme).unwrap();
                prop_assert_eq!(b.bins.iter().map(|b| b.count).sum::<u64>(), s.len() as u64);
                prop_assert!(b.bins.len() <= k);
                prop_assert!(b.bins.windows(2).all(|w| w[0].mean_prediction <= w[1].mean_prediction));
                let positives: f64 = b.bins.iter().map(|b| b.mean_outcome * b.count as f64).sum();
                prop_assert!((positives - y.iter().filter(|&&v| v).count() as f64).abs() < 1e-9);
            }
        }

        #[test]
        fn equal_mass_counts_balanced_without_ties(n in 1usize..200, k in 1usize..30, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let s: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + seed) % 1_000_003) as f64 / 1_000_003.0).collect();
            let mut uniq = s.clone();
            uniq.sort_by(f64::total_cmp);
            uniq.dedup();
            prop_assume!(uniq.len() == n);
            let b = bin_samples(&s, &vec![false; n], k, BinningScheme::EqualMass).unwrap();
            prop_assert_eq!(b.bins.len(), k);
            let counts: Vec<u64> = b.bins.iter().map(|b| b.count).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }

        #[test]
        fn weighted_view_matches_materialized((s, y, _k) in arb_instance(), w in proptest::collection::vec(0u32..4, 120), k2 in 1usize..8) {
            let sample = SortedSample::new(&s, &y).unwrap();
            let weights = &w[..s.len()];
            let view = sample.weighted(weights);
            prop_assume!(view.total() >= k2 as u64);
            let (ms, my) = view.materialize();
            for scheme in [BinningScheme::EqualWidth, BinningScheme::EqualMass] {
                let a = bin_view(&view, k2, scheme).unwrap();
                let b = bin_samples(&ms, &my, k2, scheme).unwrap();
                prop_assert_eq!(a.bins.len(), b.bins.len());
                for (x, z) in a.bins.iter().zip(&b.bins) {
                    prop_assert_eq!(x.count, z.count);
                    prop_assert!((x.mean_prediction - z.mean_prediction).abs() < 1e-12);
                    prop_assert_eq!(x.mean_outcome, z.mean_outcome);
                }
            }
        }
    }
}
