//! Score-sorted samples with optional integer multiplicities.
//!
//! Every metric in this crate is evaluated on a [`SampleView`]: the samples
//! of one group sorted by ascending score, each carrying a multiplicity. An
//! unweighted view has multiplicity one everywhere; a bootstrap replicate is
//! the same sorted sample with multinomial counts, so resampling never needs
//! to re-sort.

use crate::error::{MetricError, MetricResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    scores: Vec<f64>,
    outcomes: Vec<bool>,
    /// Position in the caller's input for each sorted position.
    source: Vec<usize>,
    /// Start of every run of equal scores, followed by `len()`.
    run_bounds: Vec<usize>,
}

impl SortedSample {
    /// Sorts by score (stable with respect to input order). Scores must be
    /// finite; range checks are left to the metrics that need them.
    pub fn new(scores: &[f64], outcomes: &[bool]) -> MetricResult<Self> {
        if scores.len() != outcomes.len() {
            return Err(MetricError::LengthMismatch {
                scores: scores.len(),
                outcomes: outcomes.len(),
            });
        }
        if scores.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some((index, &value)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
            return Err(MetricError::InvalidScore { index, value });
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let sorted_scores: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
        let sorted_outcomes = order.iter().map(|&i| outcomes[i]).collect();
        let mut run_bounds = vec![0];
        for i in 1..sorted_scores.len() {
            if sorted_scores[i] != sorted_scores[i - 1] {
                run_bounds.push(i);
            }
        }
        run_bounds.push(sorted_scores.len());
        Ok(SortedSample {
            scores: sorted_scores,
            outcomes: sorted_outcomes,
            source: order,
            run_bounds,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    /// Input position of each sorted sample.
    /// Run boundaries: run `r` covers positions `bounds[r]..bounds[r + 1]`.
    pub(crate) fn run_bounds(&self) -> &[usize] {
        &self.run_bounds
    }

    pub fn source_positions(&self) -> &[usize] {
        &self.source
    }

    pub fn view(&self) -> SampleView<'_> {
        let positives = self.outcomes.iter().filter(|&&y| y).count() as u64;
        SampleView {
            sample: self,
            weights: None,
            total: self.len() as u64,
            positives,
        }
    }

    /// View with per-position multiplicities (`weights.len() == len()`).
    pub fn weighted<'a>(&'a self, weights: &'a [u32]) -> SampleView<'a> {
        assert_eq!(weights.len(), self.len(), "one weight per sorted sample");
        let mut total = 0u64;
        let mut positives = 0u64;
        for (&w, &y) in weights.iter().zip(&self.outcomes) {
            total += u64::from(w);
            if y {
                positives += u64::from(w);
            }
        }
        SampleView {
            sample: self,
            weights: Some(weights),
            total,
            positives,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampleView<'a> {
    sample: &'a SortedSample,
    weights: Option<&'a [u32]>,
    total: u64,
    positives: u64,
}

impl<'a> SampleView<'a> {
    pub fn sample(&self) -> &'a SortedSample {
        self.sample
    }

    /// Number of sorted positions (including zero-weight ones).
    pub fn positions(&self) -> usize {
        self.sample.len()
    }

    pub fn score(&self, i: usize) -> f64 {
        self.sample.scores[i]
    }

    pub fn outcome(&self, i: usize) -> bool {
        self.sample.outcomes[i]
    }

    pub fn weight(&self, i: usize) -> u64 {
        self.weights.map_or(1, |w| u64::from(w[i]))
    }

    pub fn weights(&self) -> Option<&'a [u32]> {
        self.weights
    }

    /// Total multiplicity, i.e. the size of the (re)sample.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn positives(&self) -> u64 {
        self.positives
    }

    pub fn negatives(&self) -> u64 {
        self.total - self.positives
    }

    /// Position ranges of equal-score runs, ascending. Runs whose total
    /// weight is zero are still yielded.
    pub fn runs(&self) -> impl DoubleEndedIterator<Item = (usize, usize)> + 'a {
        self.sample.run_bounds.windows(2).map(|w| (w[0], w[1]))
    }

    /// Prefix sums of weights: `cum[i]` is the weight of positions `< i`.
    pub fn cumulative_weights(&self) -> Vec<u64> {
        let mut cum = Vec::with_capacity(self.positions() + 1);
        let mut acc = 0u64;
        cum.push(0);
        for i in 0..self.positions() {
            acc += self.weight(i);
            cum.push(acc);
        }
        cum
    }

    /// (weight, positive weight) over a position range.
    pub fn range_counts(&self, start: usize, end: usize) -> (u64, u64) {
        let mut w = 0;
        let mut p = 0;
        for i in start..end {
            let wi = self.weight(i);
            w += wi;
            if self.sample.outcomes[i] {
                p += wi;
            }
        }
        (w, p)
    }

    pub fn min_score(&self) -> Option<f64> {
        (0..self.positions())
            .find(|&i| self.weight(i) > 0)
            .map(|i| self.score(i))
    }

    pub fn max_score(&self) -> Option<f64> {
        (0..self.positions())
            .rev()
            .find(|&i| self.weight(i) > 0)
            .map(|i| self.score(i))
    }

    /// Expands multiplicities into explicit score-sorted vectors.
    pub fn materialize(&self) -> (Vec<f64>, Vec<bool>) {
        let mut s = Vec::with_capacity(self.total as usize);
        let mut y = Vec::with_capacity(self.total as usize);
        for i in 0..self.positions() {
            for _ in 0..self.weight(i) {
                s.push(self.score(i));
                y.push(self.outcome(i));
            }
        }
        (s, y)
    }

    pub(crate) fn require_both_classes(&self) -> MetricResult<()> {
        if self.positives == 0 || self.positives == self.total {
            return Err(MetricError::SingleClass {
                positives: self.positives,
                negatives: self.negatives(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_unit_interval(&self) -> MetricResult<()> {
        let bad = (0..self.positions()).find(|&i| !(0.0..=1.0).contains(&self.score(i)));
        match bad {
            Some(i) => Err(MetricError::InvalidScore {
                index: self.sample.source[i],
                value: self.score(i),
            }),
            None => Ok(()),
        }
    }
}
