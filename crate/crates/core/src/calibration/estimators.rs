use crate::calibration::binning::BinnedCalibration;
use crate::error::{MetricError, MetricResult};

/// Expected calibration error: count-weighted mean absolute gap between
/// mean prediction and observed frequency.
pub fn ece(binned: &BinnedCalibration) -> f64 {
    let n = binned.total_count as f64;
    binned
        .bins
        .iter()
        .map(|b| b.count as f64 / n * (b.mean_prediction - b.mean_outcome).abs())
        .sum()
}

/// Root mean squared calibration error over bins.
pub fn rmsce(binned: &BinnedCalibration) -> f64 {
    let n = binned.total_count as f64;
    binned
        .bins
        .iter()
        .map(|b| b.count as f64 / n * (b.mean_prediction - b.mean_outcome).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Bias-corrected RMS calibration error.
///
/// Each bin's squared gap is reduced by `ȳ(1-ȳ)/(n_b-1)`, the unbiased
/// estimate of the sampling variance of the bin frequency. The weighted sum
/// is clamped at zero before the square root. Needs two samples per bin.
pub fn debiased_rmsce(binned: &BinnedCalibration) -> MetricResult<f64> {
    let n = binned.total_count as f64;
    let mut sum = 0.0;
    for (i, b) in binned.bins.iter().enumerate() {
        if b.count < 2 {
            return Err(MetricError::BinTooSmall {
                bin: i,
                count: b.count,
                needed: 2,
            });
        }
        let gap = (b.mean_prediction - b.mean_outcome).powi(2);
        let correction = b.mean_outcome * (1.0 - b.mean_outcome) / (b.count - 1) as f64;
        sum += b.count as f64 / n * (gap - correction);
    }
    Ok(sum.max(0.0).sqrt())
}
