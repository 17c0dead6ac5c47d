use serde::{Deserialize, Serialize};

use crate::calibration::binning::{BinLayout, BinnedCalibration, BinningScheme};
use crate::error::{MetricError, MetricResult};
use crate::sample::{SampleView, SortedSample};

/// Default minimum number of samples per bin during bin-count search.
pub const DEFAULT_MIN_PER_BIN: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinSearch {
    /// Interval bisection, treating "curve is monotonic" as if it were
    /// monotone in the bin count. Fast, occasionally not the global maximum.
    #[default]
    Bisection,
    /// Checks every admissible bin count; returns the true maximum.
    LinearScan,
}

/// Largest bin count in `[1, floor(n / min_per_bin)]` whose binned
/// calibration curve has nondecreasing observed frequencies and at least
/// `min_per_bin` samples in every bin.
pub fn max_monotonic_bins(
    scores: &[f64],
    outcomes: &[bool],
    min_per_bin: usize,
    scheme: BinningScheme,
    search: BinSearch,
) -> MetricResult<usize> {
    let sample = SortedSample::new(scores, outcomes)?;
    let view = sample.view();
    view.require_unit_interval()?;
    search_bins(&view, min_per_bin, scheme, search).map(|(k, _)| k)
}

pub(crate) fn search_bins(
    view: &SampleView<'_>,
    min_per_bin: usize,
    scheme: BinningScheme,
    search: BinSearch,
) -> MetricResult<(usize, BinnedCalibration)> {
    if min_per_bin < 1 {
        return Err(MetricError::InvalidParameter("min_per_bin must be at least 1".into()));
    }
    let n = view.total();
    if n < min_per_bin as u64 {
        return Err(MetricError::TooFewSamples {
            needed: min_per_bin as u64,
            got: n,
        });
    }
    let hi = (n / min_per_bin as u64) as usize;
    let layout = BinLayout::new(view, scheme);
    let admissible = |k: usize| -> bool {
        let Ok(counts) = layout.counts(k) else {
            return false;
        };
        // compare p_a / c_a <= p_b / c_b without division
        counts.iter().all(|&(c, _)| c >= min_per_bin as u64)
            && counts
                .windows(2)
                .all(|w| u128::from(w[0].1) * u128::from(w[1].0) <= u128::from(w[1].1) * u128::from(w[0].0))
    };
    let k = match search {
        BinSearch::Bisection => {
            let (mut lo, mut hi) = (1usize, hi);
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                if admissible(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            lo
        }
        BinSearch::LinearScan => (2..=hi).rev().find(|&k| admissible(k)).unwrap_or(1),
    };
    Ok((k, layout.bin(k)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid20(lower_positive: bool) -> (Vec<f64>, Vec<bool>) {
        let s: Vec<f64> = (0..20).map(|i| 0.025 + 0.05 * i as f64).collect();
        let y = (0..20).map(|i| (i < 10) == lower_positive).collect();
        (s, y)
    }

    #[test]
    fn ten_samples_allow_one_bin() {
        let s: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let y: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        for search in [BinSearch::Bisection, BinSearch::LinearScan] {
            assert_eq!(
                max_monotonic_bins(&s, &y, 10, BinningScheme::EqualMass, search).unwrap(),
                1
            );
        }
    }

    #[test]
    fn monotone_and_anti_monotone_twenty() {
        let (s, y) = grid20(false);
        assert_eq!(
            max_monotonic_bins(&s, &y, 10, BinningScheme::EqualMass, BinSearch::Bisection).unwrap(),
            2
        );
        let (s, y) = grid20(true);
        assert_eq!(
            max_monotonic_bins(&s, &y, 10, BinningScheme::EqualMass, BinSearch::Bisection).unwrap(),
            1
        );
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            max_monotonic_bins(
                &[0.1; 9],
                &[true; 9],
                10,
                BinningScheme::EqualMass,
                BinSearch::Bisection
            )
            .unwrap_err(),
            MetricError::TooFewSamples { needed: 10, got: 9 }
        );
    }

    #[test]
    fn ties_that_shrink_a_bin_are_inadmissible() {
        // 19 tied scores and one distinct: the 2-bin split would leave a bin of 1
        let mut s = vec![0.3; 19];
        s.push(0.9);
        let mut y = vec![false; 19];
        y.push(true);
        assert_eq!(
            max_monotonic_bins(&s, &y, 10, BinningScheme::EqualMass, BinSearch::LinearScan).unwrap(),
            1
        );
    }
}
