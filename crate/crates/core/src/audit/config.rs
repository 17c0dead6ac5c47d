//! Audit configuration, read from TOML.
//!
//! Every key has a default; an empty file audits only the overall group.
//! The configuration digest is the SHA-256 of the canonical JSON rendering
//! of the effective configuration. `output_dir` and `workers` do not affect
//! results and are excluded from it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::NamedEstimator;
use crate::calibration::loess::{DEFAULT_GRID_SIZE, DEFAULT_SPAN};
use crate::calibration::{BinningScheme, CalibrationEstimatorConfig, Estimator};
use crate::ranking::ThresholdRange;
use crate::resampling::BootstrapPlan;

use super::AuditError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Drmsce,
    EceBaselines,
    Auroc,
    Auprg,
    Eur,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Drmsce,
        MetricKind::EceBaselines,
        MetricKind::Auroc,
        MetricKind::Auprg,
        MetricKind::Eur,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Drmsce => "drmsce",
            MetricKind::EceBaselines => "ece-baselines",
            MetricKind::Auroc => "auroc",
            MetricKind::Auprg => "auprg",
            MetricKind::Eur => "eur",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Reliability,
    Roc,
    Prg,
    Representation,
    Histogram,
}

impl CurveKind {
    pub const ALL: [CurveKind; 5] = [
        CurveKind::Reliability,
        CurveKind::Roc,
        CurveKind::Prg,
        CurveKind::Representation,
        CurveKind::Histogram,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Reliability => "reliability",
            CurveKind::Roc => "roc",
            CurveKind::Prg => "prg",
            CurveKind::Representation => "representation",
            CurveKind::Histogram => "histogram",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    pub score_column: String,
    pub outcome_column: String,
    pub delimiter: char,
    /// Declared values per sensitive attribute; attributes not listed take
    /// their values from the data.
    pub attribute_values: BTreeMap<String, Vec<String>>,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: None,
            score_column: "score".into(),
            outcome_column: "outcome".into(),
            delimiter: ',',
            attribute_values: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupConfig {
    pub sensitive_attributes: Vec<String>,
    pub max_combination: usize,
    pub min_group_size: usize,
}

impl Default for GroupConfig {
    fn default() -> Self {
        GroupConfig {
            sensitive_attributes: Vec::new(),
            max_combination: 1,
            min_group_size: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Zero disables resampling; only point estimates are reported.
    pub n_replicates: usize,
    pub ci_level: f64,
    pub drop_threshold: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        let plan = BootstrapPlan::default();
        BootstrapConfig {
            n_replicates: plan.n_replicates,
            ci_level: plan.ci_level,
            drop_threshold: plan.drop_threshold,
        }
    }
}

pub fn default_baselines() -> Vec<NamedEstimator> {
    vec![
        NamedEstimator::new(
            "ece-15",
            CalibrationEstimatorConfig::fixed(BinningScheme::EqualWidth, Estimator::EceL1, 15),
        ),
        NamedEstimator::new(
            "ace-15",
            CalibrationEstimatorConfig::fixed(BinningScheme::EqualMass, Estimator::EceL1, 15),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub drmsce: CalibrationEstimatorConfig,
    pub baselines: Vec<NamedEstimator>,
    pub loess_span: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            drmsce: CalibrationEstimatorConfig::drmsce(),
            baselines: default_baselines(),
            loess_span: DEFAULT_SPAN,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankingConfig {
    pub threshold_range: Option<ThresholdRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub kinds: Vec<CurveKind>,
    pub grid_size: usize,
    pub histogram_bins: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            kinds: CurveKind::ALL.to_vec(),
            grid_size: DEFAULT_GRID_SIZE,
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub seed: u64,
    pub metrics: Vec<MetricKind>,
    pub input: InputConfig,
    pub groups: GroupConfig,
    pub bootstrap: BootstrapConfig,
    pub calibration: CalibrationConfig,
    pub ranking: RankingConfig,
    pub curves: CurveConfig,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            seed: 0,
            metrics: MetricKind::ALL.to_vec(),
            input: InputConfig::default(),
            groups: GroupConfig::default(),
            bootstrap: BootstrapConfig::default(),
            calibration: CalibrationConfig::default(),
            ranking: RankingConfig::default(),
            curves: CurveConfig::default(),
            output_dir: None,
            workers: None,
        }
    }
}

fn has_duplicates<T: Ord + Clone>(items: &[T]) -> bool {
    let mut v = items.to_vec();
    v.sort();
    v.windows(2).any(|w| w[0] == w[1])
}

impl AuditConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, AuditError> {
        toml::from_str(text).map_err(|e| AuditError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, AuditError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AuditError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn plan(&self) -> BootstrapPlan {
        BootstrapPlan {
            n_replicates: self.bootstrap.n_replicates,
            ci_level: self.bootstrap.ci_level,
            base_seed: self.seed,
            drop_threshold: self.bootstrap.drop_threshold,
        }
    }

    pub fn enabled(&self, metric: MetricKind) -> bool {
        self.metrics.contains(&metric)
    }

    pub fn validate(&self) -> Result<(), AuditError> {
        let fail = |m: String| Err(AuditError::Config(m));
        if self.groups.min_group_size < 1 {
            return fail("groups.min_group_size must be at least 1".into());
        }
        if self.groups.max_combination < 1 {
            return fail("groups.max_combination must be at least 1".into());
        }
        if has_duplicates(&self.groups.sensitive_attributes) {
            return fail("groups.sensitive_attributes lists an attribute twice".into());
        }
        for name in self.input.attribute_values.keys() {
            if !self.groups.sensitive_attributes.contains(name) {
                return fail(format!(
                    "input.attribute_values names '{name}', which is not a sensitive attribute"
                ));
            }
        }
        if !self.input.delimiter.is_ascii() {
            return fail("input.delimiter must be a single ASCII character".into());
        }
        if has_duplicates(&self.metrics) {
            return fail("metrics lists a metric twice".into());
        }
        if has_duplicates(&self.curves.kinds) {
            return fail("curves.kinds lists a curve twice".into());
        }
        if self.bootstrap.n_replicates > 0 {
            self.plan()
                .validate()
                .map_err(|e| AuditError::Config(format!("bootstrap: {e}")))?;
        }
        self.calibration
            .drmsce
            .validate()
            .map_err(|e| AuditError::Config(format!("calibration.drmsce: {e}")))?;
        let mut names: Vec<&str> = vec!["drmsce", "auroc", "auprg", "eur"];
        for b in &self.calibration.baselines {
            b.config
                .validate()
                .map_err(|e| AuditError::Config(format!("calibration baseline '{}': {e}", b.name)))?;
            if names.contains(&b.name.as_str()) {
                return fail(format!("calibration baseline name '{}' is already in use", b.name));
            }
            names.push(&b.name);
        }
        if !(self.calibration.loess_span > 0.0 && self.calibration.loess_span <= 1.0) {
            return fail("calibration.loess_span must lie in (0, 1]".into());
        }
        if let Some(r) = self.ranking.threshold_range {
            r.validate()
                .map_err(|e| AuditError::Config(format!("ranking.threshold_range: {e}")))?;
        }
        if self.curves.grid_size < 2 {
            return fail("curves.grid_size must be at least 2".into());
        }
        if self.curves.histogram_bins < 1 {
            return fail("curves.histogram_bins must be at least 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Canonical JSON of the effective configuration (keys sorted).
    pub fn canonical_json(&self) -> String {
        serde_json::to_value(self)
            .expect("configuration serializes")
            .to_string()
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}
