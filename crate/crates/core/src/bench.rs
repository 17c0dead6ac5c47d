//! Synthetic experiments: the calibration-metric sample-size bias study and
//! the two-group example that is calibrated and equally discriminative in
//! both groups yet ranks them unequally.

use std::io::Write;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{BinningScheme, CalibrationEstimatorConfig, Estimator, DEFAULT_MIN_PER_BIN};
use crate::curve::fmt_num;
use crate::data::{Attribute, AttributeSchema, DataError, Dataset, RiskRecord};
use crate::error::{MetricError, MetricResult};
use crate::sample::SortedSample;
use crate::seed::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// True risk equals the score.
    Perfect,
    /// True risk is the squared score.
    Square,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Perfect => "perfect",
            Scenario::Square => "square",
        }
    }

    pub fn true_risk(self, r: f64) -> f64 {
        match self {
            Scenario::Perfect => r,
            Scenario::Square => r * r,
        }
    }
}

/// `n` scores drawn uniformly from `[0, 1)` with outcomes drawn from the
/// scenario's true risk.
pub fn generate_calibration_stream(n: usize, scenario: Scenario, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = stream_rng(seed, "calibration-stream", 0);
    let mut scores = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for _ in 0..n {
        let r: f64 = rng.random();
        let u: f64 = rng.random();
        scores.push(r);
        outcomes.push(u < scenario.true_risk(r));
    }
    (scores, outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ece: f64,
    pub rmsce: f64,
}

/// Population calibration errors of the scenario:
/// `E|R - rho|` and `sqrt(E[(R - rho)^2])` with `R ~ U(0, 1)`.
pub fn ground_truth_errors(scenario: Scenario) -> GroundTruth {
    match scenario {
        Scenario::Perfect => GroundTruth { ece: 0.0, rmsce: 0.0 },
        Scenario::Square => GroundTruth {
            ece: 1.0 / 6.0,
            rmsce: (1.0f64 / 30.0).sqrt(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEstimator {
    pub name: String,
    #[serde(flatten)]
    pub config: CalibrationEstimatorConfig,
}

impl NamedEstimator {
    pub fn new(name: &str, config: CalibrationEstimatorConfig) -> Self {
        NamedEstimator {
            name: name.to_string(),
            config,
        }
    }
}

/// ECE and ACE with 15 fixed bins and with bin-count search, the bias
/// corrected RMSCE with 15 equal-width and 15 equal-mass bins, and DRMSCE.
pub fn default_metric_panel() -> Vec<NamedEstimator> {
    use BinningScheme::{EqualMass, EqualWidth};
    use CalibrationEstimatorConfig as C;
    use Estimator::{DebiasedRmsce, EceL1};
    vec![
        NamedEstimator::new("ece-15", C::fixed(EqualWidth, EceL1, 15)),
        NamedEstimator::new("ece-bcs", C::searched(EqualWidth, EceL1, DEFAULT_MIN_PER_BIN)),
        NamedEstimator::new("ace-15", C::fixed(EqualMass, EceL1, 15)),
        NamedEstimator::new("ace-bcs", C::searched(EqualMass, EceL1, DEFAULT_MIN_PER_BIN)),
        NamedEstimator::new("debiased-rmsce-ew-15", C::fixed(EqualWidth, DebiasedRmsce, 15)),
        NamedEstimator::new("debiased-rmsce-em-15", C::fixed(EqualMass, DebiasedRmsce, 15)),
        NamedEstimator::new("drmsce", C::drmsce()),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasStudyConfig {
    pub sample_sizes: Vec<usize>,
    pub n_repetitions: usize,
    pub scenarios: Vec<Scenario>,
    pub metrics: Vec<NamedEstimator>,
    pub seed: u64,
}

impl Default for BiasStudyConfig {
    fn default() -> Self {
        BiasStudyConfig {
            sample_sizes: vec![100, 1_000, 10_000],
            n_repetitions: 100,
            scenarios: vec![Scenario::Perfect, Scenario::Square],
            metrics: default_metric_panel(),
            seed: 0,
        }
    }
}

impl BiasStudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> MetricResult<()> {
        let invalid = |m: &str| Err(MetricError::InvalidParameter(m.to_string()));
        if self.sample_sizes.is_empty() || self.scenarios.is_empty() || self.metrics.is_empty() {
            return invalid("sample_sizes, scenarios and metrics must be nonempty");
        }
        if self.n_repetitions < 1 {
            return invalid("n_repetitions must be at least 1");
        }
        let mut names: Vec<&str> = self.metrics.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return invalid("metric names must be unique");
        }
        for m in &self.metrics {
            m.config.validate()?;
            let smallest = *self.sample_sizes.iter().min().expect("nonempty");
            if smallest < m.config.min_samples() {
                return Err(MetricError::InvalidParameter(format!(
                    "sample size {smallest} is below the minimum {} of metric '{}'",
                    m.config.min_samples(),
                    m.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionValue {
    pub value: Option<f64>,
    pub n_bins: Option<usize>,
    pub missing_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub n_valid: usize,
    pub n_missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCell {
    pub metric: String,
    pub scenario: Scenario,
    pub n: usize,
    pub values: Vec<RepetitionValue>,
    pub summary: CellSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyResult {
    /// Ordered by scenario, then metric, then sample size.
    pub cells: Vec<BiasCell>,
    pub ground_truth: Vec<(Scenario, GroundTruth)>,
}

impl BiasStudyResult {
    pub fn cell(&self, metric: &str, scenario: Scenario, n: usize) -> Option<&BiasCell> {
        self.cells
            .iter()
            .find(|c| c.metric == metric && c.scenario == scenario && c.n == n)
    }
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(values: &[RepetitionValue]) -> CellSummary {
    let mut v: Vec<f64> = values.iter().filter_map(|r| r.value).collect();
    v.sort_by(f64::total_cmp);
    let q = |p| (!v.is_empty()).then(|| quantile(&v, p));
    CellSummary {
        median: q(0.5),
        q1: q(0.25),
        q3: q(0.75),
        n_valid: v.len(),
        n_missing: values.len() - v.len(),
    }
}

/// Runs every (scenario, sample size, repetition) draw once and evaluates
/// all metrics on it. Repetition seeds are derived from the study seed.
pub fn run_bias_study(config: &BiasStudyConfig) -> MetricResult<BiasStudyResult> {
    config.validate()?;
    let tasks: Vec<(Scenario, usize, usize)> = config
        .scenarios
        .iter()
        .flat_map(|&s| {
            config
                .sample_sizes
                .iter()
                .flat_map(move |&n| (0..config.n_repetitions).map(move |r| (s, n, r)))
        })
        .collect();
    let evaluated: Vec<Vec<RepetitionValue>> = tasks
        .par_iter()
        .map(|&(scenario, n, rep)| {
            let label = format!("bias/{}/{n}", scenario.as_str());
            let (s, y) = generate_calibration_stream(n, scenario, derive_seed(config.seed, &label, rep as u64));
            let sample = SortedSample::new(&s, &y).expect("generated scores are finite");
            let view = sample.view();
            config
                .metrics
                .iter()
                .map(|m| match m.config.evaluate_view(&view) {
                    Ok(v) => RepetitionValue {
                        value: Some(v.value),
                        n_bins: Some(v.n_bins),
                        missing_reason: None,
                    },
                    Err(e) => RepetitionValue {
                        value: None,
                        n_bins: None,
                        missing_reason: Some(e.reason_code().to_string()),
                    },
                })
                .collect()
        })
        .collect();

    let n_sizes = config.sample_sizes.len();
    let reps = config.n_repetitions;
    let mut cells = Vec::with_capacity(config.scenarios.len() * config.metrics.len() * n_sizes);
    for (si, &scenario) in config.scenarios.iter().enumerate() {
        for (mi, m) in config.metrics.iter().enumerate() {
            for (ni, &n) in config.sample_sizes.iter().enumerate() {
                let base = (si * n_sizes + ni) * reps;
                let values: Vec<RepetitionValue> = (0..reps).map(|r| evaluated[base + r][mi].clone()).collect();
                cells.push(BiasCell {
                    metric: m.name.clone(),
                    scenario,
                    n,
                    summary: summarize(&values),
                    values,
                });
            }
        }
    }
    let ground_truth = config.scenarios.iter().map(|&s| (s, ground_truth_errors(s))).collect();
    Ok(BiasStudyResult { cells, ground_truth })
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// One row per metric, scenario, sample size and repetition.
pub fn write_bias_long<W: Write>(result: &BiasStudyResult, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "metric",
        "scenario",
        "n",
        "repetition",
        "value",
        "n_bins",
        "missing_reason",
    ])?;
    for c in &result.cells {
        for (rep, v) in c.values.iter().enumerate() {
            w.write_record([
                c.metric.clone(),
                c.scenario.as_str().to_string(),
                c.n.to_string(),
                rep.to_string(),
                opt_num(v.value),
                v.n_bins.map(|b| b.to_string()).unwrap_or_default(),
                v.missing_reason.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_bias_summary<W: Write>(result: &BiasStudyResult, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "scenario", "n", "median", "q1", "q3", "n_valid", "n_missing"])?;
    for c in &result.cells {
        w.write_record([
            c.metric.clone(),
            c.scenario.as_str().to_string(),
            c.n.to_string(),
            opt_num(c.summary.median),
            opt_num(c.summary.q1),
            opt_num(c.summary.q3),
            c.summary.n_valid.to_string(),
            c.summary.n_missing.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ground_truth<W: Write>(result: &BiasStudyResult, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario", "ece", "rmsce"])?;
    for (s, g) in &result.ground_truth {
        w.write_record([s.as_str().to_string(), fmt_num(g.ece), fmt_num(g.rmsce)])?;
    }
    w.flush()?;
    Ok(())
}

pub const TWO_GROUP_ATTRIBUTE: &str = "group";
pub const HIGH_BASE_RATE_GROUP: &str = "blue";
pub const LOW_BASE_RATE_GROUP: &str = "orange";

/// Two equally sized groups whose true risks follow Beta(4, 2) ("blue",
/// base rate 2/3) and Beta(2, 4) ("orange", base rate 1/3). Scores equal
/// the true risks, so the model is calibrated in both groups, and the two
/// laws mirror each other, so both groups have the same AUROC.
pub fn generate_two_group_example(n_per_group: usize, seed: u64) -> Result<Dataset, DataError> {
    let schema = AttributeSchema::new(vec![Attribute::new(
        TWO_GROUP_ATTRIBUTE,
        &[HIGH_BASE_RATE_GROUP, LOW_BASE_RATE_GROUP],
    )]);
    let laws = [Beta::new(4.0, 2.0).expect("valid"), Beta::new(2.0, 4.0).expect("valid")];
    let mut records = Vec::with_capacity(2 * n_per_group);
    for (g, law) in laws.iter().enumerate() {
        let mut rng = stream_rng(seed, "two-group", g as u64);
        for _ in 0..n_per_group {
            let rho: f64 = law.sample(&mut rng);
            let u: f64 = rng.random();
            records.push(RiskRecord {
                score: rho,
                outcome: u < rho,
                values: vec![g as u32],
            });
        }
    }
    Dataset::new(schema, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(y: &[bool]) -> f64 {
        y.iter().filter(|&&v| v).count() as f64 / y.len() as f64
    }

    #[test]
    fn stream_base_rates() {
        let n = 10_000;
        let (_, y) = generate_calibration_stream(n, Scenario::Perfect, 1);
        let sd = (0.25 / n as f64).sqrt();
        assert!((mean(&y) - 0.5).abs() < 3.0 * sd);
        let (_, y) = generate_calibration_stream(n, Scenario::Square, 1);
        // Var(Y) = 1/3 * 2/3
        let sd = (2.0 / 9.0 / n as f64).sqrt();
        assert!((mean(&y) - 1.0 / 3.0).abs() < 3.0 * sd);
    }

    #[test]
    fn stream_is_deterministic() {
        let a = generate_calibration_stream(500, Scenario::Square, 9);
        assert_eq!(a, generate_calibration_stream(500, Scenario::Square, 9));
        assert_ne!(a, generate_calibration_stream(500, Scenario::Square, 10));
    }

    #[test]
    fn ground_truth_matches_monte_carlo() {
        assert_eq!(
            ground_truth_errors(Scenario::Perfect),
            GroundTruth { ece: 0.0, rmsce: 0.0 }
        );
        let g = ground_truth_errors(Scenario::Square);
        assert!((g.rmsce - 0.18257).abs() < 1e-5);
        let mut rng = stream_rng(4, "mc", 0);
        let m = 200_000;
        let (mut e1, mut e2) = (0.0, 0.0);
        for _ in 0..m {
            let r: f64 = rng.random();
            let d = r - r * r;
            e1 += d;
            e2 += d * d;
        }
        assert!((e1 / m as f64 - g.ece).abs() < 2e-3);
        assert!(((e2 / m as f64).sqrt() - g.rmsce).abs() < 2e-3);
    }

    #[test]
    fn small_study_bookkeeping() {
        let cfg = BiasStudyConfig {
            sample_sizes: vec![100, 200],
            n_repetitions: 5,
            ..Default::default()
        };
        let res = run_bias_study(&cfg).unwrap();
        assert_eq!(res.cells.len(), 2 * 7 * 2);
        assert!(res.cells.iter().all(|c| c.values.len() == 5));
        assert_eq!(res, run_bias_study(&cfg).unwrap());
        let mut buf = Vec::new();
        write_bias_long(&res, &mut buf).unwrap();
        let rows = String::from_utf8(buf).unwrap().lines().count();
        assert_eq!(rows, 1 + 7 * 2 * 2 * 5);
    }

    #[test]
    fn study_config_from_toml() {
        let c =
            BiasStudyConfig::from_toml_str("sample_sizes = [100, 500]\nscenarios = [\"square\"]\nseed = 3").unwrap();
        assert_eq!(c.sample_sizes, vec![100, 500]);
        assert_eq!(c.scenarios, vec![Scenario::Square]);
        assert_eq!(c.metrics, default_metric_panel());
        let c = BiasStudyConfig::from_toml_str(
            "[[metrics]]\nname = \"ece-10\"\nbinning = \"equal-width\"\nestimator = \"ece-l1\"\npolicy = \"fixed\"\nn_bins = 10",
        )
        .unwrap();
        assert_eq!(c.metrics.len(), 1);
        assert!(BiasStudyConfig::from_toml_str("sample_size = 3").is_err());
    }

    #[test]
    fn study_rejects_inapplicable_sizes() {
        let cfg = BiasStudyConfig {
            sample_sizes: vec![12],
            ..Default::default()
        };
        assert!(run_bias_study(&cfg).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn two_group_base_rates() {
        let d = generate_two_group_example(20_000, 5).unwrap();
        assert_eq!(d.len(), 40_000);
        let y = d.outcomes();
        let sd = (2.0 / 9.0 / 20_000.0f64).sqrt();
        assert!((mean(&y[..20_000]) - 2.0 / 3.0).abs() < 4.0 * sd);
        assert!((mean(&y[20_000..]) - 1.0 / 3.0).abs() < 4.0 * sd);
        assert_eq!(d.attribute_value(0, TWO_GROUP_ATTRIBUTE), Some(HIGH_BASE_RATE_GROUP));
        assert_eq!(d, generate_two_group_example(20_000, 5).unwrap());
    }
}
