//! Set-selection fairness of score-based ranking.
//!
//! Selecting everyone with `score >= τ`, a group's normalized representation
//! is `p(G | selected) / p(G | Y = 1)`. The expected under-representation
//! (EUR) averages `min(ratio, 1)` over thresholds drawn from the empirical
//! score distribution of the whole evaluation set: each sample contributes
//! one draw `τ = r_i`.

use serde::{Deserialize, Serialize};

use crate::curve::CurveSeries;
use crate::data::Dataset;
use crate::error::{MetricError, MetricResult};
use crate::exact_sum::ExactSum;
use crate::groups::GroupIndex;

pub const REPRESENTATION_X: &str = "threshold";
pub const REPRESENTATION_Y: &str = "normalized_representation";

/// Inclusive range of decision thresholds of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRange {
    pub min: f64,
    pub max: f64,
}

impl ThresholdRange {
    pub fn contains(&self, t: f64) -> bool {
        self.min <= t && t <= self.max
    }

    pub fn validate(&self) -> MetricResult<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min <= self.max {
            Ok(())
        } else {
            Err(MetricError::InvalidParameter(format!(
                "threshold range [{}, {}] is not a valid interval",
                self.min, self.max
            )))
        }
    }
}

fn in_range(range: Option<ThresholdRange>, t: f64) -> bool {
    range.is_none_or(|r| r.contains(t))
}

/// Selected counts at every distinct score threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSweep {
    /// Distinct score values, ascending.
    pub thresholds: Vec<f64>,
    /// Number of samples with `score >= thresholds[j]`.
    pub selected: Vec<usize>,
}

impl SelectionSweep {
    pub fn new(scores: &[f64]) -> Self {
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut thresholds = Vec::new();
        let mut selected = Vec::new();
        for (i, &s) in sorted.iter().enumerate() {
            if thresholds.last() != Some(&s) {
                thresholds.push(s);
                selected.push(sorted.len() - i);
            }
        }
        SelectionSweep { thresholds, selected }
    }

    /// Per-threshold count of `group_scores` at or above the threshold.
    pub fn group_selected(&self, group_scores: &[f64]) -> Vec<usize> {
        let mut sorted = group_scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        self.thresholds
            .iter()
            .map(|&t| sorted.len() - sorted.partition_point(|&s| s < t))
            .collect()
    }

    pub fn index_of(&self, score: f64) -> Option<usize> {
        self.thresholds.binary_search_by(|t| t.total_cmp(&score)).ok()
    }
}

/// `p(G | Y = 1)`: the group's share of all positive outcomes.
pub fn target_representation(dataset: &Dataset, group: &GroupIndex) -> MetricResult<f64> {
    let total = dataset.positive_count();
    if total == 0 {
        return Err(MetricError::NoPositives);
    }
    Ok(group.positive_count as f64 / total as f64)
}

fn checked_target(dataset: &Dataset, group: &GroupIndex) -> MetricResult<f64> {
    let target = target_representation(dataset, group)?;
    if group.positive_count == 0 {
        return Err(MetricError::GroupWithoutPositives);
    }
    Ok(target)
}

fn group_scores(dataset: &Dataset, group: &GroupIndex) -> Vec<f64> {
    let records = dataset.records();
    group.row_indices.iter().map(|&i| records[i].score).collect()
}

/// Per-threshold normalized representation; `None` where nobody is selected.
fn ratios(sweep: &SelectionSweep, group_selected: &[usize], target: f64) -> Vec<Option<f64>> {
    sweep
        .selected
        .iter()
        .zip(group_selected)
        .map(|(&sel, &g)| (sel > 0).then(|| (g as f64 / sel as f64) / target))
        .collect()
}

/// Normalized representation at every distinct score threshold (within
/// `range` when given), ascending in threshold.
pub fn representation_curve(
    dataset: &Dataset,
    group: &GroupIndex,
    range: Option<ThresholdRange>,
) -> MetricResult<CurveSeries> {
    if let Some(r) = range {
        r.validate()?;
    }
    let target = checked_target(dataset, group)?;
    let sweep = SelectionSweep::new(&dataset.scores());
    let g = sweep.group_selected(&group_scores(dataset, group));
    let r = ratios(&sweep, &g, target);
    Ok(CurveSeries::from_xy(
        REPRESENTATION_X,
        REPRESENTATION_Y,
        sweep
            .thresholds
            .iter()
            .zip(r)
            .filter(|(t, _)| in_range(range, **t))
            .filter_map(|(&t, v)| v.map(|v| (t, v))),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EurValue {
    pub value: f64,
    /// Threshold draws that entered the average.
    pub used_draws: usize,
    /// Draws inside the range whose selection was empty.
    pub skipped_draws: usize,
}

/// Expected under-representation of `group`, in `[0, 1]`.
pub fn eur(dataset: &Dataset, group: &GroupIndex, range: Option<ThresholdRange>) -> MetricResult<EurValue> {
    if let Some(r) = range {
        r.validate()?;
    }
    let target = checked_target(dataset, group)?;
    let scores = dataset.scores();
    let sweep = SelectionSweep::new(&scores);
    let g = sweep.group_selected(&group_scores(dataset, group));
    let r = ratios(&sweep, &g, target);
    let (mut sum, mut used, mut skipped) = (ExactSum::new(), 0usize, 0usize);
    for &s in &scores {
        if !in_range(range, s) {
            continue;
        }
        let j = sweep.index_of(s).expect("every score is a sweep threshold");
        match r[j] {
            Some(v) => {
                sum.add(v.min(1.0));
                used += 1;
            }
            None => skipped += 1,
        }
    }
    if used == 0 {
        return Err(MetricError::NoThresholdsInRange);
    }
    Ok(EurValue {
        value: sum.value() / used as f64,
        used_draws: used,
        skipped_draws: skipped,
    })
}

/// Population-wide sorted order used to evaluate many groups and bootstrap
/// replicates without re-sorting. Samples are ordered by (score, row).
///
/// Bootstrap replicates reweight one group and hold the rest of the
/// population fixed, so between two member positions the selected group
/// count is constant and the per-threshold ratios form a harmonic series.
/// [`PopulationRanking::eur_weighted`] sums those stretches in closed form
/// and costs time proportional to the group size rather than the population.
#[derive(Debug, Clone)]
pub struct PopulationRanking {
    scores: Vec<f64>,
    outcomes: Vec<bool>,
    rank_of: Vec<usize>,
    run_bounds: Vec<usize>,
    run_of: Vec<u32>,
    /// Ascending indices of runs holding more than one sample.
    tied_runs: Vec<usize>,
    /// `harmonic[k] = 1 + 1/2 + ... + 1/k`.
    harmonic: Vec<f64>,
    positives: u64,
}

impl PopulationRanking {
    pub fn new(dataset: &Dataset) -> Self {
        let records = dataset.records();
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| records[a].score.total_cmp(&records[b].score));
        let mut rank_of = vec![0; order.len()];
        for (pos, &row) in order.iter().enumerate() {
            rank_of[row] = pos;
        }
        let scores: Vec<f64> = order.iter().map(|&i| records[i].score).collect();
        let outcomes: Vec<bool> = order.iter().map(|&i| records[i].outcome).collect();
        let mut run_bounds = vec![0];
        for i in 1..scores.len() {
            if scores[i] != scores[i - 1] {
                run_bounds.push(i);
            }
        }
        run_bounds.push(scores.len());
        let mut run_of = vec![0u32; scores.len()];
        let mut tied_runs = Vec::new();
        for (r, w) in run_bounds.windows(2).enumerate() {
            run_of[w[0]..w[1]].fill(r as u32);
            if w[1] - w[0] > 1 {
                tied_runs.push(r);
            }
        }
        let mut harmonic = Vec::with_capacity(2 * scores.len() + 1);
        harmonic.push(0.0);
        for k in 1..=2 * scores.len() {
            harmonic.push(harmonic[k - 1] + 1.0 / k as f64);
        }
        let positives = outcomes.iter().filter(|&&y| y).count() as u64;
        PopulationRanking {
            scores,
            outcomes,
            rank_of,
            run_bounds,
            run_of,
            tied_runs,
            harmonic,
            positives,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn min_score(&self) -> f64 {
        self.scores[0]
    }

    pub fn max_score(&self) -> f64 {
        *self.scores.last().expect("dataset is nonempty")
    }

    /// Ascending population positions of the group's rows. The j-th entry
    /// corresponds to the j-th sample of the group's score-sorted sample.
    pub fn member_positions(&self, group: &GroupIndex) -> Vec<usize> {
        let mut pos: Vec<usize> = group.row_indices.iter().map(|&r| self.rank_of[r]).collect();
        pos.sort_unstable();
        pos
    }

    /// Group members take multiplicities from `weights` (one per member, in
    /// member-position order); everyone else counts once.
    fn target(&self, members: &[usize], weights: Option<&[u32]>) -> MetricResult<f64> {
        let w = |j: usize| weights.map_or(1, |w| u64::from(w[j]));
        let mut group_pos = 0u64;
        let mut group_pos_unit = 0u64;
        for (j, &p) in members.iter().enumerate() {
            if self.outcomes[p] {
                group_pos += w(j);
                group_pos_unit += 1;
            }
        }
        let total = self.positives - group_pos_unit + group_pos;
        if total == 0 {
            return Err(MetricError::NoPositives);
        }
        if group_pos == 0 {
            return Err(MetricError::GroupWithoutPositives);
        }
        Ok(group_pos as f64 / total as f64)
    }

    /// Run indices `[lo, hi)` whose score lies in `range`.
    fn runs_in_range(&self, range: Option<ThresholdRange>) -> (usize, usize) {
        let n_runs = self.run_bounds.len() - 1;
        match range {
            None => (0, n_runs),
            Some(r) => {
                let first =
                    |pred: &dyn Fn(f64) -> bool| self.run_bounds[..n_runs].partition_point(|&b| pred(self.scores[b]));
                (first(&|s| s < r.min), first(&|s| s <= r.max))
            }
        }
    }

    /// EUR with the group's samples reweighted and the rest of the
    /// population held fixed. Without weights this is the exact per-draw
    /// sum; with weights, stretches of non-member thresholds are summed in
    /// closed form (equal to the per-draw sum up to rounding).
    pub fn eur_weighted(
        &self,
        members: &[usize],
        weights: Option<&[u32]>,
        range: Option<ThresholdRange>,
    ) -> MetricResult<f64> {
        let target = self.target(members, weights)?;
        let extra: i64 = weights.map_or(0, |w| w.iter().map(|&x| i64::from(x) - 1).sum());
        let (sum, used) = match weights {
            Some(w) if extra <= self.len() as i64 => self.eur_stretches(members, w, target, range),
            _ => self.eur_direct(members, weights, target, range),
        };
        if used == 0 {
            return Err(MetricError::NoThresholdsInRange);
        }
        Ok(sum / used as f64)
    }

    fn eur_direct(
        &self,
        members: &[usize],
        weights: Option<&[u32]>,
        target: f64,
        range: Option<ThresholdRange>,
    ) -> (f64, u64) {
        let w = |j: usize| weights.map_or(1, |w| u64::from(w[j]));
        let mut m = members.len();
        let (mut sel, mut sel_g) = (0u64, 0u64);
        let (mut sum, mut used) = (ExactSum::new(), 0u64);
        for run in self.run_bounds.windows(2).rev() {
            let (a, b) = (run[0], run[1]);
            let (mut run_g, mut run_c) = (0u64, 0u64);
            for p in (a..b).rev() {
                if m > 0 && members[m - 1] == p {
                    m -= 1;
                    run_g += w(m);
                } else {
                    run_c += 1;
                }
            }
            sel_g += run_g;
            sel += run_g + run_c;
            let run_w = run_g + run_c;
            if run_w == 0 || !in_range(range, self.scores[a]) {
                continue;
            }
            let ratio = (sel_g as f64 / sel as f64) / target;
            sum.add_product(run_w, ratio.min(1.0));
            used += run_w;
        }
        (sum.value(), used)
    }

    /// `sum over positions p in [a, b) of 1 / (N - p + d)`.
    fn harmonic_span(&self, a: usize, b: usize, d: i64) -> f64 {
        let n = self.len() as i64;
        let hi = (n - a as i64 + d) as usize;
        let lo = (n - b as i64 + d) as usize;
        self.harmonic[hi] - self.harmonic[lo]
    }

    /// Sum of `len * min(g / (sel * target), 1)` over the member-free runs
    /// `[r_lo, r_hi)`, where `sel = N - run_start + d`.
    fn stretch(&self, r_lo: usize, r_hi: usize, g: u64, d: i64, target: f64) -> f64 {
        if r_lo >= r_hi || g == 0 {
            return 0.0;
        }
        let n = self.len() as i64;
        let bounds = &self.run_bounds;
        // runs with sel <= g / target are capped at 1; they sit at the top
        let limit = g as f64 / target - d as f64;
        let split = r_lo + bounds[r_lo..r_hi].partition_point(|&b| ((n - b as i64) as f64) > limit);
        let capped = (bounds[r_hi] - bounds[split]) as f64;
        if split == r_lo {
            return capped;
        }
        let (a, b) = (bounds[r_lo], bounds[split]);
        let mut series = self.harmonic_span(a, b, d);
        // a tied run counts len / sel once instead of one term per position
        let t0 = self.tied_runs.partition_point(|&r| r < r_lo);
        for &r in self.tied_runs[t0..].iter().take_while(|&&r| r < split) {
            let (ra, rb) = (bounds[r], bounds[r + 1]);
            let sel = (n - ra as i64 + d) as f64;
            series += (rb - ra) as f64 / sel - self.harmonic_span(ra, rb, d);
        }
        capped + g as f64 / target * series
    }

    fn eur_stretches(
        &self,
        members: &[usize],
        weights: &[u32],
        target: f64,
        range: Option<ThresholdRange>,
    ) -> (f64, u64) {
        let (lo, hi) = self.runs_in_range(range);
        let n = self.len() as i64;
        let bounds = &self.run_bounds;
        let clip = |a: usize, b: usize| (a.max(lo), b.min(hi));
        let (mut g, mut d) = (0u64, 0i64);
        let (mut sum, mut used) = (0.0, 0u64);
        // runs at or above `top` have been handled
        let mut top = bounds.len() - 1;
        let mut j = members.len();
        while j > 0 {
            let r = self.run_of[members[j - 1]] as usize;
            let (a, b) = clip(r + 1, top);
            if a < b {
                sum += self.stretch(a, b, g, d, target);
                used += (bounds[b] - bounds[a]) as u64;
            }
            let (mut run_w, mut run_m) = (0u64, 0u64);
            while j > 0 && self.run_of[members[j - 1]] as usize == r {
                j -= 1;
                run_w += u64::from(weights[j]);
                run_m += 1;
            }
            g += run_w;
            d += run_w as i64 - run_m as i64;
            let len = (bounds[r + 1] - bounds[r]) as u64;
            let weight = len - run_m + run_w;
            if weight > 0 && (lo..hi).contains(&r) {
                let sel = (n - bounds[r] as i64 + d) as f64;
                sum += weight as f64 * ((g as f64 / sel) / target).min(1.0);
                used += weight;
            }
            top = r;
        }
        let (a, b) = clip(0, top);
        if a < b {
            sum += self.stretch(a, b, g, d, target);
            used += (bounds[b] - bounds[a]) as u64;
        }
        (sum, used)
    }

    /// Normalized representation at each grid threshold (ascending grid);
    /// NaN where the selection is empty.
    pub fn representation_on_grid(
        &self,
        members: &[usize],
        weights: Option<&[u32]>,
        grid: &[f64],
    ) -> MetricResult<Vec<f64>> {
        let target = self.target(members, weights)?;
        let w = |j: usize| weights.map_or(1, |w| u64::from(w[j]));
        let n = self.len();
        let mut out = vec![f64::NAN; grid.len()];
        let mut m = members.len();
        let (mut g, mut d) = (0u64, 0i64);
        for (gi, &t) in grid.iter().enumerate().rev() {
            let p = self.scores.partition_point(|&s| s < t);
            while m > 0 && members[m - 1] >= p {
                m -= 1;
                g += w(m);
                d += w(m) as i64 - 1;
            }
            let sel = (n - p) as i64 + d;
            if sel > 0 {
                out[gi] = (g as f64 / sel as f64) / target;
            }
        }
        Ok(out)
    }
}
