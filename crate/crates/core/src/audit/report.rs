//! Audit report and its on-disk form.
//!
//! The report lists per-group estimates with their uncertainty and never a
//! verdict; judging whether differences matter is left to the reader.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::{fmt_num, CurveSeries};
use crate::data::Dataset;
use crate::groups::{Condition, GroupIndex};
use crate::resampling::{MetricEstimate, Reliability};

use super::config::{AuditConfig, CurveKind};
use super::AuditError;

pub const REPORT_FILE: &str = "report.json";
pub const METRICS_TABLE: &str = "metrics_by_group.csv";
const CURVE_DIR: &str = "curves";
const MISSING: &str = "NA";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub metric: String,
    #[serde(flatten)]
    pub estimate: MetricEstimate,
    /// Bins realized by the point estimate (calibration metrics only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub kind: CurveKind,
    /// Path relative to the output directory, set when written.
    pub file: Option<String>,
    pub missing_reason: Option<String>,
    #[serde(skip)]
    pub series: Option<CurveSeries>,
}

impl CurveEntry {
    pub(crate) fn present(kind: CurveKind, series: CurveSeries) -> Self {
        CurveEntry {
            kind,
            file: None,
            missing_reason: None,
            series: Some(series),
        }
    }

    pub(crate) fn missing(kind: CurveKind, reason: &str) -> Self {
        CurveEntry {
            kind,
            file: None,
            missing_reason: Some(reason.to_string()),
            series: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub name: String,
    pub conditions: Vec<Condition>,
    pub size: usize,
    pub positive_count: usize,
    pub base_rate: f64,
    pub metrics: Vec<MetricEntry>,
    pub curves: Vec<CurveEntry>,
}

impl GroupReport {
    pub(crate) fn new(group: &GroupIndex, metrics: Vec<MetricEntry>, curves: Vec<CurveEntry>) -> Self {
        GroupReport {
            name: group.name().to_string(),
            conditions: group.definition.conditions().to_vec(),
            size: group.size,
            positive_count: group.positive_count,
            base_rate: group.positive_count as f64 / group.size as f64,
            metrics,
            curves,
        }
    }

    pub fn metric(&self, name: &str) -> Option<&MetricEntry> {
        self.metrics.iter().find(|m| m.metric == name)
    }

    pub fn curve(&self, kind: CurveKind) -> Option<&CurveEntry> {
        self.curves.iter().find(|c| c.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_digest: String,
    pub config: AuditConfig,
    pub n_rows: usize,
    pub n_positives: usize,
    pub n_groups: usize,
    pub groups: Vec<GroupReport>,
}

/// Directory-safe rendering of a group name.
fn slug(name: &str) -> String {
    let mut s: String = name
        .replace(" & ", "__")
        .chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '-' | '_' | '.' => c,
            '=' => '-',
            _ => '_',
        })
        .collect();
    s.truncate(80);
    s
}

impl AuditReport {
    pub(crate) fn new(config: &AuditConfig, dataset: &Dataset, mut groups: Vec<GroupReport>) -> Self {
        let width = groups.len().to_string().len().max(3);
        for (i, g) in groups.iter_mut().enumerate() {
            let dir = format!("{CURVE_DIR}/{i:0width$}_{}", slug(&g.name));
            for c in &mut g.curves {
                if c.series.is_some() {
                    c.file = Some(format!("{dir}/{}.csv", c.kind.as_str()));
                }
            }
        }
        AuditReport {
            tool: "riskfair".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config_digest: config.digest(),
            config: config.clone(),
            n_rows: dataset.len(),
            n_positives: dataset.positive_count(),
            n_groups: groups.len(),
            groups,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Flat table with one row per group.
    pub fn write_metrics_table<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let names: Vec<&str> = self
            .groups
            .first()
            .map(|g| g.metrics.iter().map(|m| m.metric.as_str()).collect())
            .unwrap_or_default();
        let mut header: Vec<String> = ["group", "size", "positive_count", "base_rate"]
            .map(String::from)
            .to_vec();
        for n in &names {
            for suffix in [
                "",
                "_median",
                "_ci_lower",
                "_ci_upper",
                "_n_bins",
                "_replicates_used",
                "_replicates_dropped",
                "_reliability",
                "_missing_reason",
            ] {
                header.push(format!("{n}{suffix}"));
            }
        }
        w.write_record(&header)?;
        let num = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| MISSING.to_string());
        for g in &self.groups {
            let mut row = vec![
                g.name.clone(),
                g.size.to_string(),
                g.positive_count.to_string(),
                fmt_num(g.base_rate),
            ];
            for m in &g.metrics {
                let e = &m.estimate;
                row.push(num(e.point_estimate));
                row.push(num(e.median));
                row.push(num(e.ci_lower));
                row.push(num(e.ci_upper));
                row.push(m.n_bins.map(|b| b.to_string()).unwrap_or_else(|| MISSING.to_string()));
                row.push(e.n_replicates_used.to_string());
                row.push(e.n_replicates_dropped.to_string());
                row.push(
                    match e.reliability {
                        Reliability::Ok => "ok",
                        Reliability::Unreliable => "unreliable",
                    }
                    .to_string(),
                );
                row.push(e.missing_reason.clone().unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AuditError + '_ {
    move |source| AuditError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the report document, the per-group table and one file per
/// available curve; returns the paths written, in order.
pub fn emit_report(report: &AuditReport, output_dir: &Path) -> Result<Vec<PathBuf>, AuditError> {
    fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;
    let mut written = Vec::new();

    let path = output_dir.join(REPORT_FILE);
    fs::write(&path, report.to_json()).map_err(io_err(&path))?;
    written.push(path);

    let path = output_dir.join(METRICS_TABLE);
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    report
        .write_metrics_table(BufWriter::new(file))
        .map_err(|e| AuditError::Runtime(format!("writing {}: {e}", path.display())))?;
    written.push(path);

    for g in &report.groups {
        for c in &g.curves {
            let (Some(rel), Some(series)) = (&c.file, &c.series) else {
                continue;
            };
            let path = output_dir.join(rel);
            let dir = path.parent().expect("curve files live in a group directory");
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            series
                .write_csv(BufWriter::new(file))
                .map_err(|e| AuditError::Runtime(format!("writing {}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}
