//! TOML run configuration. Every key has a default, so an empty file runs the
//! standard setup; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{default_grid, full_grid, BootstrapOptions, ReportUnit};
use crate::event_log::{ColumnMapping, CsvOptions, TimestampFormat};
use crate::features::{FeatureOptions, PeakMode, PeakOptions};
use crate::models::GbtParams;
use crate::timeseries::CalendarMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Csv,
    Xes,
}

impl std::str::FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "xes" => Ok(LogFormat::Xes),
            _ => Err(format!("unknown log format `{s}` (expected csv or xes)")),
        }
    }
}

impl LogFormat {
    /// `.xes` and `.xes.gz` are XES, everything else CSV.
    pub fn infer(path: &Path) -> LogFormat {
        let name = path.to_string_lossy().to_ascii_lowercase();
        if name.ends_with(".xes") || name.ends_with(".xes.gz") {
            LogFormat::Xes
        } else {
            LogFormat::Csv
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    /// Inferred from the file extension when absent.
    pub format: Option<LogFormat>,
    pub columns: ColumnMapping,
    pub timestamp_format: TimestampFormat,
    pub naive_offset_minutes: i32,
    pub max_bad_row_fraction: f64,
    pub report_unit: ReportUnit,
    pub trim_boundary_days: u32,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: None,
            format: None,
            columns: ColumnMapping::default(),
            timestamp_format: TimestampFormat::Auto,
            naive_offset_minutes: 0,
            max_bad_row_fraction: 0.01,
            report_unit: ReportUnit::Hours,
            trim_boundary_days: 0,
        }
    }
}

impl DatasetConfig {
    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            mapping: self.columns.clone(),
            timestamp_format: self.timestamp_format.clone(),
            naive_offset_minutes: self.naive_offset_minutes,
            max_bad_row_fraction: self.max_bad_row_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesConfig {
    pub peak_mode: PeakMode,
    pub dense_calendar: bool,
    pub peaks: PeakOptions,
}

impl FeaturesConfig {
    pub fn options(&self) -> FeatureOptions {
        FeatureOptions {
            peak_mode: self.peak_mode,
            peaks: self.peaks,
        }
    }

    pub fn calendar_mode(&self) -> CalendarMode {
        if self.dense_calendar {
            CalendarMode::Dense
        } else {
            CalendarMode::CaseStart
        }
    }
}

/// One explicit grid candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub feature_fraction: f64,
    pub bagging_fraction: f64,
}

/// `"default"` (four tuned configurations), `"full"`, or an explicit list of candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Named(String),
    Explicit(Vec<GridEntry>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Named("default".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsConfig {
    pub grid: GridSpec,
    pub ar_p_max: usize,
    pub seed: u64,
    pub min_samples_leaf: usize,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            grid: GridSpec::default(),
            ar_p_max: 5,
            seed: 42,
            min_samples_leaf: 5,
        }
    }
}

impl ModelsConfig {
    /// Grid candidates with the configured seed and leaf size filled in.
    pub fn candidates(&self) -> Result<Vec<GbtParams>> {
        let base = match &self.grid {
            GridSpec::Named(name) if name == "default" => default_grid(),
            GridSpec::Named(name) if name == "full" => full_grid(),
            GridSpec::Named(name) => {
                return Err(Error::Config(format!(
                    "models.grid must be \"default\", \"full\" or a list of candidates, got \"{name}\""
                )))
            }
            GridSpec::Explicit(entries) => entries
                .iter()
                .map(|e| GbtParams {
                    n_estimators: e.n_estimators,
                    learning_rate: e.learning_rate,
                    max_depth: e.max_depth,
                    feature_fraction: e.feature_fraction,
                    bagging_fraction: e.bagging_fraction,
                    ..GbtParams::default()
                })
                .collect(),
        };
        if base.is_empty() {
            return Err(Error::Config("models.grid is empty".into()));
        }
        Ok(base
            .into_iter()
            .map(|p| GbtParams {
                seed: self.seed,
                min_samples_leaf: self.min_samples_leaf,
                ..p
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub train_fraction: f64,
    pub folds: usize,
    pub bootstrap_replicates: usize,
    pub bootstrap_block_length: Option<usize>,
    pub importance_repeats: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            train_fraction: 0.8,
            folds: 5,
            bootstrap_replicates: 1000,
            bootstrap_block_length: None,
            importance_repeats: 10,
        }
    }
}

impl EvaluationConfig {
    pub fn bootstrap(&self) -> BootstrapOptions {
        BootstrapOptions {
            replicates: self.bootstrap_replicates,
            alpha: 0.05,
            block_length: self.bootstrap_block_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("artifacts"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub features: FeaturesConfig,
    pub models: ModelsConfig,
    pub evaluation: EvaluationConfig,
    pub output: OutputConfig,
}

fn open_unit(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{field} must be in (0, 1), got {v}")))
    }
}

fn half_open_unit(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{field} must be in (0, 1], got {v}")))
    }
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{field} must be positive")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative dataset and output paths
    /// are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = cfg.dataset.path.as_mut() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = dir.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        open_unit("dataset.max_bad_row_fraction", self.dataset.max_bad_row_fraction)?;
        open_unit("evaluation.train_fraction", self.evaluation.train_fraction)?;
        positive("evaluation.folds", self.evaluation.folds)?;
        positive("evaluation.bootstrap_replicates", self.evaluation.bootstrap_replicates)?;
        positive("evaluation.importance_repeats", self.evaluation.importance_repeats)?;
        if self.evaluation.bootstrap_block_length == Some(0) {
            return Err(Error::Config(
                "evaluation.bootstrap_block_length must be positive".into(),
            ));
        }
        positive("models.min_samples_leaf", self.models.min_samples_leaf)?;
        positive("features.peaks.min_distance", self.features.peaks.min_distance)?;
        if !(-24 * 60..=24 * 60).contains(&self.dataset.naive_offset_minutes) {
            return Err(Error::Config(format!(
                "dataset.naive_offset_minutes must be within one day, got {}",
                self.dataset.naive_offset_minutes
            )));
        }
        for (i, p) in self.models.candidates()?.iter().enumerate() {
            let field = |name: &str| format!("models.grid[{i}].{name}");
            half_open_unit(&field("feature_fraction"), p.feature_fraction)?;
            half_open_unit(&field("bagging_fraction"), p.bagging_fraction)?;
            positive(&field("n_estimators"), p.n_estimators)?;
            positive(&field("max_depth"), p.max_depth)?;
            if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                return Err(Error::Config(format!(
                    "{} must be positive, got {}",
                    field("learning_rate"),
                    p.learning_rate
                )));
            }
        }
        Ok(())
    }

    pub fn dataset_format(&self) -> Option<LogFormat> {
        self.dataset
            .format
            .or_else(|| self.dataset.path.as_deref().map(LogFormat::infer))
    }
}
