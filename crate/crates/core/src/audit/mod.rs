//! End-to-end audit: validate the input table, enumerate groups, estimate
//! every enabled metric and curve per group with bootstrap uncertainty, and
//! assemble a report.
//!
//! Groups are processed concurrently and replicates within a group as well;
//! every replicate draws from a stream keyed by (seed, group name, index),
//! so the report does not depend on the number of workers.

mod config;
mod report;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

pub use config::{
    default_baselines, AuditConfig, BootstrapConfig, CalibrationConfig, CurveConfig, CurveKind, GroupConfig,
    InputConfig, MetricKind, RankingConfig,
};
pub use report::{emit_report, AuditReport, CurveEntry, GroupReport, MetricEntry, METRICS_TABLE, REPORT_FILE};

use crate::calibration::loess::{RELIABILITY_X, RELIABILITY_Y};
use crate::calibration::{loess_on_grid, score_grid, CalibrationEstimatorConfig};
use crate::curve::{linspace, value_at, CurveSeries};
use crate::data::{read_table_file, validate_dataset, Attribute, AttributeSchema, DataError, Dataset};
use crate::discrimination::{auprg_view, auroc_view, prg_view, roc_view, PRG_X, PRG_Y, ROC_X, ROC_Y};
use crate::error::{MetricError, MetricResult};
use crate::groups::{enumerate_groups, group_slice, GroupError, GroupIndex};
use crate::ranking::{PopulationRanking, REPRESENTATION_X, REPRESENTATION_Y};
use crate::resampling::{curve_with_bands, run_replicates, summarize, MetricEstimate};
use crate::sample::{SampleView, SortedSample};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("group error: {0}")]
    Group(#[from] GroupError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

/// Reads and validates the input table named in the configuration.
pub fn load_dataset(config: &AuditConfig) -> Result<Dataset, AuditError> {
    let path = config
        .input
        .path
        .as_ref()
        .ok_or_else(|| AuditError::Config("no input path given".into()))?;
    if !path.exists() {
        return Err(AuditError::Io {
            path: path.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        });
    }
    let raw = read_table_file(path, config.input.delimiter as u8)?;
    let schema = AttributeSchema::new(
        config
            .groups
            .sensitive_attributes
            .iter()
            .map(|name| Attribute {
                name: name.clone(),
                values: config.input.attribute_values.get(name).cloned().unwrap_or_default(),
            })
            .collect(),
    );
    Ok(validate_dataset(
        &raw,
        &schema,
        &config.input.score_column,
        &config.input.outcome_column,
    )?)
}

/// Loads the input named in the configuration and audits it.
pub fn run_audit(config: &AuditConfig) -> Result<AuditReport, AuditError> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    run_audit_on_dataset(config, &dataset)
}

/// Audits an already validated dataset.
pub fn run_audit_on_dataset(config: &AuditConfig, dataset: &Dataset) -> Result<AuditReport, AuditError> {
    config.validate()?;
    let groups = enumerate_groups(
        dataset,
        &config.groups.sensitive_attributes,
        config.groups.max_combination,
        config.groups.min_group_size,
    )?;
    let ranking = PopulationRanking::new(dataset);
    let ctx = Context {
        config,
        dataset,
        ranking: &ranking,
    };
    let work = || -> Vec<GroupReport> { groups.par_iter().map(|g| ctx.audit_group(g)).collect() };
    let reports = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AuditError::Runtime(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(AuditReport::new(config, dataset, reports))
}

/// Scalar evaluated per group, in report order.
enum Scalar<'c> {
    Calibration(&'c CalibrationEstimatorConfig),
    Auroc,
    Auprg,
    Eur,
}

struct Context<'a> {
    config: &'a AuditConfig,
    dataset: &'a Dataset,
    ranking: &'a PopulationRanking,
}

/// What a group needs to evaluate metrics on a (re)sample.
struct GroupData<'a> {
    sample: SortedSample,
    members: Vec<usize>,
    ranking: &'a PopulationRanking,
}

impl GroupData<'_> {
    fn scalar(&self, metric: &Scalar<'_>, view: &SampleView<'_>) -> MetricResult<(f64, Option<usize>)> {
        match metric {
            Scalar::Calibration(c) => c.evaluate_view(view).map(|v| (v.value, Some(v.n_bins))),
            Scalar::Auroc => auroc_view(view).map(|v| (v, None)),
            Scalar::Auprg => auprg_view(view).map(|v| (v, None)),
            Scalar::Eur => unreachable!("evaluated with the population ranking"),
        }
    }
}

fn finite(v: MetricResult<f64>) -> MetricResult<f64> {
    match v {
        Ok(x) if !x.is_finite() => Err(MetricError::InvalidParameter("non-finite value".into())),
        other => other,
    }
}

/// Values of a polyline on a grid of x values; NaN outside its x range.
fn on_grid(curve: &CurveSeries, grid: &[f64]) -> Vec<f64> {
    let xy = curve.xy();
    grid.iter().map(|&x| value_at(&xy, x).unwrap_or(f64::NAN)).collect()
}

fn histogram(view: &SampleView<'_>, bins: usize) -> Vec<f64> {
    let mut counts = vec![0u64; bins];
    for i in 0..view.positions() {
        let b = ((view.score(i) * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += view.weight(i);
    }
    let total = view.total() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// Scalar metrics and curve values of one bootstrap replicate.
type Replicate = (Vec<MetricResult<f64>>, Vec<MetricResult<Vec<f64>>>);

struct CurveSpec {
    kind: CurveKind,
    grid: Vec<f64>,
    labels: (&'static str, &'static str),
}

impl Context<'_> {
    fn scalars(&self) -> Vec<(String, Scalar<'_>)> {
        let c = self.config;
        let mut out = Vec::new();
        if c.enabled(MetricKind::Drmsce) {
            out.push(("drmsce".to_string(), Scalar::Calibration(&c.calibration.drmsce)));
        }
        if c.enabled(MetricKind::EceBaselines) {
            for b in &c.calibration.baselines {
                out.push((b.name.clone(), Scalar::Calibration(&b.config)));
            }
        }
        if c.enabled(MetricKind::Auroc) {
            out.push(("auroc".to_string(), Scalar::Auroc));
        }
        if c.enabled(MetricKind::Auprg) {
            out.push(("auprg".to_string(), Scalar::Auprg));
        }
        if c.enabled(MetricKind::Eur) {
            out.push(("eur".to_string(), Scalar::Eur));
        }
        out
    }

    fn curve_specs(&self, sample: &SortedSample) -> Vec<CurveSpec> {
        let c = &self.config.curves;
        let unit = linspace(0.0, 1.0, c.grid_size);
        c.kinds
            .iter()
            .map(|&kind| {
                let (grid, labels) = match kind {
                    CurveKind::Reliability => (score_grid(&sample.view(), c.grid_size), (RELIABILITY_X, RELIABILITY_Y)),
                    CurveKind::Roc => (unit.clone(), (ROC_X, ROC_Y)),
                    CurveKind::Prg => (unit.clone(), (PRG_X, PRG_Y)),
                    CurveKind::Representation => {
                        let (lo, hi) = match self.config.ranking.threshold_range {
                            Some(r) => (r.min, r.max),
                            None => (self.ranking.min_score(), self.ranking.max_score()),
                        };
                        (linspace(lo, hi, c.grid_size), (REPRESENTATION_X, REPRESENTATION_Y))
                    }
                    CurveKind::Histogram => {
                        let b = c.histogram_bins;
                        let centers = (0..b).map(|i| (i as f64 + 0.5) / b as f64).collect();
                        (centers, ("risk_score", "fraction"))
                    }
                };
                CurveSpec { kind, grid, labels }
            })
            .collect()
    }

    fn curve_values(
        &self,
        spec: &CurveSpec,
        data: &GroupData<'_>,
        view: &SampleView<'_>,
        weights: Option<&[u32]>,
    ) -> MetricResult<Vec<f64>> {
        match spec.kind {
            CurveKind::Reliability => loess_on_grid(view, self.config.calibration.loess_span, &spec.grid),
            CurveKind::Roc => roc_view(view).map(|c| on_grid(&c, &spec.grid)),
            CurveKind::Prg => prg_view(view).map(|c| on_grid(&c, &spec.grid)),
            CurveKind::Representation => data.ranking.representation_on_grid(&data.members, weights, &spec.grid),
            CurveKind::Histogram => Ok(histogram(view, self.config.curves.histogram_bins)),
        }
    }

    fn eval_scalar(
        &self,
        metric: &Scalar<'_>,
        data: &GroupData<'_>,
        view: &SampleView<'_>,
        weights: Option<&[u32]>,
    ) -> MetricResult<(f64, Option<usize>)> {
        match metric {
            Scalar::Eur => data
                .ranking
                .eur_weighted(&data.members, weights, self.config.ranking.threshold_range)
                .map(|v| (v, None)),
            other => data.scalar(other, view),
        }
    }

    fn audit_group(&self, group: &GroupIndex) -> GroupReport {
        let (scores, outcomes) = group_slice(self.dataset, group).expect("group rows come from this dataset");
        let data = GroupData {
            sample: SortedSample::new(&scores, &outcomes).expect("validated scores are finite"),
            members: self.ranking.member_positions(group),
            ranking: self.ranking,
        };
        let scalars = self.scalars();
        let specs = self.curve_specs(&data.sample);
        let view = data.sample.view();

        let points: Vec<MetricResult<(f64, Option<usize>)>> = scalars
            .iter()
            .map(|(_, m)| self.eval_scalar(m, &data, &view, None))
            .collect();
        let centers: Vec<MetricResult<Vec<f64>>> =
            specs.iter().map(|s| self.curve_values(s, &data, &view, None)).collect();

        let plan = self.config.plan();
        let replicates: Vec<Replicate> = if plan.n_replicates == 0 {
            Vec::new()
        } else {
            run_replicates(data.sample.len(), &plan, group.name(), |w| {
                let v = data.sample.weighted(w);
                let m = scalars
                    .iter()
                    .map(|(_, s)| finite(self.eval_scalar(s, &data, &v, Some(w)).map(|x| x.0)))
                    .collect();
                let c = specs
                    .iter()
                    .zip(&centers)
                    .map(|(s, center)| match center {
                        Ok(_) => self.curve_values(s, &data, &v, Some(w)),
                        Err(e) => Err(e.clone()),
                    })
                    .collect();
                (m, c)
            })
        };

        let metrics = scalars
            .iter()
            .enumerate()
            .map(|(i, (name, _))| {
                let point = finite(points[i].clone().map(|x| x.0));
                let estimate = if plan.n_replicates == 0 {
                    MetricEstimate::point_only(&point)
                } else {
                    let reps: Vec<MetricResult<f64>> = replicates.iter().map(|r| r.0[i].clone()).collect();
                    summarize(&point, &reps, &plan)
                };
                MetricEntry {
                    metric: name.clone(),
                    estimate,
                    n_bins: points[i].as_ref().ok().and_then(|x| x.1),
                }
            })
            .collect();

        let curves = specs
            .iter()
            .enumerate()
            .map(|(i, spec)| match &centers[i] {
                Err(e) => CurveEntry::missing(spec.kind, e.reason_code()),
                Ok(center) => {
                    let reps: Vec<MetricResult<Vec<f64>>> = replicates.iter().map(|r| r.1[i].clone()).collect();
                    let series = curve_with_bands(spec.labels.0, spec.labels.1, &spec.grid, center, &reps, &plan);
                    CurveEntry::present(spec.kind, series)
                }
            })
            .collect();

        GroupReport::new(group, metrics, curves)
    }
}
