//! Discriminative ability: ROC curve, AUROC, precision-recall-gain curve and
//! AUPRG. Every sweep uses the decision rule "select iff score >= threshold"
//! and moves through tied scores in a single step.

use crate::curve::{trapezoid, CurveSeries};
use crate::error::MetricResult;
use crate::sample::{SampleView, SortedSample};

pub const ROC_X: &str = "false_positive_rate";
pub const ROC_Y: &str = "true_positive_rate";
pub const PRG_X: &str = "recall_gain";
pub const PRG_Y: &str = "precision_gain";

/// Operating points as (false positives, true positives), from selecting
/// nobody to selecting everyone.
pub(crate) fn sweep_counts(view: &SampleView<'_>) -> Vec<(u64, u64)> {
    let mut out = vec![(0, 0)];
    let (mut fp, mut tp) = (0u64, 0u64);
    for (start, end) in view.runs().rev() {
        let (w, p) = view.range_counts(start, end);
        if w == 0 {
            continue;
        }
        tp += p;
        fp += w - p;
        out.push((fp, tp));
    }
    out
}

pub fn roc_curve(scores: &[f64], outcomes: &[bool]) -> MetricResult<CurveSeries> {
    let sample = SortedSample::new(scores, outcomes)?;
    roc_view(&sample.view())
}

pub(crate) fn roc_view(view: &SampleView<'_>) -> MetricResult<CurveSeries> {
    view.require_both_classes()?;
    let (p, n) = (view.positives() as f64, view.negatives() as f64);
    Ok(CurveSeries::from_xy(
        ROC_X,
        ROC_Y,
        sweep_counts(view)
            .into_iter()
            .map(|(fp, tp)| (fp as f64 / n, tp as f64 / p)),
    ))
}

/// Concordance statistic with midranks for ties:
/// `(sum of positive midranks - P(P+1)/2) / (P N)`.
pub fn auroc(scores: &[f64], outcomes: &[bool]) -> MetricResult<f64> {
    let sample = SortedSample::new(scores, outcomes)?;
    auroc_view(&sample.view())
}

pub(crate) fn auroc_view(view: &SampleView<'_>) -> MetricResult<f64> {
    view.require_both_classes()?;
    // twice the midrank sum, kept in integers
    let mut below = 0u128;
    let mut twice_rank_sum = 0u128;
    for (start, end) in view.runs() {
        let (w, p) = view.range_counts(start, end);
        let (w, p) = (u128::from(w), u128::from(p));
        twice_rank_sum += p * (2 * below + w + 1);
        below += w;
    }
    let pos = u128::from(view.positives());
    let neg = u128::from(view.negatives());
    let numerator = twice_rank_sum - pos * (pos + 1);
    Ok(numerator as f64 / (2 * pos * neg) as f64)
}

/// Precision-recall-gain curve (x = recall gain, y = precision gain).
///
/// Operating points with recall gain below zero are discarded; the point
/// where recall equals the base rate is interpolated linearly in count space
/// between the neighbouring operating points, so the curve starts at recall
/// gain 0 and ends at the select-all point (1, 0).
pub fn prg_curve(scores: &[f64], outcomes: &[bool]) -> MetricResult<CurveSeries> {
    let sample = SortedSample::new(scores, outcomes)?;
    prg_view(&sample.view())
}

pub(crate) fn prg_view(view: &SampleView<'_>) -> MetricResult<CurveSeries> {
    view.require_both_classes()?;
    Ok(CurveSeries::from_xy(PRG_X, PRG_Y, prg_points(view)))
}

fn prg_points(view: &SampleView<'_>) -> Vec<(f64, f64)> {
    let p = view.positives();
    let n = view.negatives();
    let ratio = p as f64 / n as f64;
    let precision_gain = |fp: f64, tp: f64| 1.0 - ratio * fp / tp;
    let recall_gain = |tp: f64| 1.0 - ratio * (p as f64 - tp) / tp;

    let counts = sweep_counts(view);
    // first operating point with recall >= base rate, i.e. tp (p + n) >= p^2
    let lhs = |tp: u64| u128::from(tp) * u128::from(p + n);
    let rhs = u128::from(p) * u128::from(p);
    let j = counts
        .iter()
        .position(|&(_, tp)| lhs(tp) >= rhs)
        .expect("select-all point has full recall");

    let mut points = Vec::with_capacity(counts.len() - j + 1);
    let (fp1, tp1) = counts[j];
    if lhs(tp1) != rhs {
        let (fp0, tp0) = counts[j - 1];
        let target = (p as f64) * (p as f64) / (p + n) as f64;
        let t = (target - tp0 as f64) / (tp1 - tp0) as f64;
        let fp = fp0 as f64 + t * (fp1 - fp0) as f64;
        points.push((0.0, precision_gain(fp, target)));
    }
    for &(fp, tp) in &counts[j..] {
        let x = if lhs(tp) == rhs { 0.0 } else { recall_gain(tp as f64) };
        points.push((x, precision_gain(fp as f64, tp as f64)));
    }
    points
}

/// Area under the precision-recall-gain curve over recall gain in [0, 1].
/// Can be negative for rankings worse than the base rate.
pub fn auprg(scores: &[f64], outcomes: &[bool]) -> MetricResult<f64> {
    let sample = SortedSample::new(scores, outcomes)?;
    auprg_view(&sample.view())
}

pub(crate) fn auprg_view(view: &SampleView<'_>) -> MetricResult<f64> {
    view.require_both_classes()?;
    Ok(polyline_area(&prg_points(view)))
}

/// Trapezoidal area after dropping interior points of constant-height runs,
/// which leaves the area unchanged but avoids summing many small widths.
fn polyline_area(points: &[(f64, f64)]) -> f64 {
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (i, &pt) in points.iter().enumerate() {
        let interior = i > 0 && i + 1 < points.len() && points[i - 1].1 == pt.1 && points[i + 1].1 == pt.1;
        if !interior {
            kept.push(pt);
        }
    }
    trapezoid(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::MetricError;
    use proptest::prelude::*;

    const S: [f64; 4] = [0.9, 0.7, 0.4, 0.2];
    const Y: [bool; 4] = [true, true, false, false];

    #[test]
    fn roc_hand_sweep() {
        let c = roc_curve(&S, &Y).unwrap();
        assert_eq!(c.xy(), vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn roc_all_tied_is_diagonal() {
        let c = roc_curve(&[0.3; 4], &Y).unwrap();
        assert_eq!(c.xy(), vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auroc(&[0.3; 4], &Y).unwrap(), 0.5);
    }

    #[test]
    fn roc_flipped_labels_swap_axes() {
        let flipped: Vec<bool> = Y.iter().map(|y| !y).collect();
        let a = roc_curve(&S, &Y).unwrap().xy();
        let b = roc_curve(&S, &flipped).unwrap().xy();
        let swapped: Vec<(f64, f64)> = a.iter().map(|&(x, y)| (y, x)).collect();
        assert_eq!(b, swapped);
    }

    #[test]
    fn auroc_examples() {
        let y = [false, false, true, true];
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &y).unwrap(), 0.75);
        assert_eq!(auroc(&S, &Y).unwrap(), 1.0);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            auroc(&S, &[true; 4]),
            Err(MetricError::SingleClass {
                positives: 4,
                negatives: 0
            })
        ));
        assert!(roc_curve(&S, &[false; 4]).is_err());
        assert!(prg_curve(&S, &[false; 4]).is_err());
        assert!(auprg(&S, &[true; 4]).is_err());
    }

    #[test]
    fn prg_perfect_ranking() {
        let c = prg_curve(&S, &Y).unwrap().xy();
        assert!(c.contains(&(0.0, 1.0)));
        assert!(c.contains(&(1.0, 1.0)));
        assert_eq!(*c.last().unwrap(), (1.0, 0.0));
        assert_eq!(auprg(&S, &Y).unwrap(), 1.0);
    }

    #[test]
    fn prg_all_tied_has_zero_area() {
        let c = prg_curve(&[0.5; 4], &Y).unwrap().xy();
        assert_eq!(*c.last().unwrap(), (1.0, 0.0));
        assert!(c.iter().all(|p| p.1.abs() < 1e-15));
        assert_eq!(auprg(&[0.5; 4], &Y).unwrap(), 0.0);
    }

    #[test]
    fn prg_flipped_perfect_is_negative() {
        let flipped: Vec<bool> = Y.iter().map(|y| !y).collect();
        assert_eq!(prg_curve(&S, &flipped).unwrap().xy(), vec![(0.0, -1.0), (1.0, 0.0)]);
        assert_eq!(auprg(&S, &flipped).unwrap(), -0.5);
    }

    #[test]
    fn perfect_ranking_with_tied_positives() {
        let s = [0.9, 0.9, 0.9, 0.1, 0.1];
        let y = [true, true, true, false, false];
        assert_eq!(auprg(&s, &y).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn auroc_is_a_rank_statistic(
            data in proptest::collection::vec((0u8..20, any::<bool>()), 2..80)
        ) {
            let s: Vec<f64> = data.iter().map(|d| f64::from(d.0) / 20.0).collect();
            let y: Vec<bool> = data.iter().map(|d| d.1).collect();
            prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
            let a = auroc(&s, &y).unwrap();
            let t: Vec<f64> = s.iter().map(|v| v * v * 0.5 + 0.1).collect();
            prop_assert_eq!(a, auroc(&t, &y).unwrap());
            let flipped: Vec<bool> = y.iter().map(|v| !v).collect();
            prop_assert!((a + auroc(&s, &flipped).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(auprg(&s, &y).unwrap() <= 1.0 + 1e-12);
            prop_assert!((roc_curve(&s, &y).unwrap().area() - a).abs() < 1e-12);
        }

        #[test]
        fn weighted_views_match_materialized(
            data in proptest::collection::vec((0u8..10, any::<bool>(), 0u32..4), 2..60)
        ) {
            let s: Vec<f64> = data.iter().map(|d| f64::from(d.0) / 10.0).collect();
            let y: Vec<bool> = data.iter().map(|d| d.1).collect();
            let w: Vec<u32> = data.iter().map(|d| d.2).collect();
            let sample = SortedSample::new(&s, &y).unwrap();
            let view = sample.weighted(&w);
            let (ms, my) = view.materialize();
            match (auroc_view(&view), auroc(&ms, &my)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                (Ok(_), Err(e)) | (Err(e), Ok(_)) => prop_assert!(false, "disagreement: {:?}", e),
            }
            if let (Ok(a), Ok(b)) = (auprg_view(&view), auprg(&ms, &my)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
