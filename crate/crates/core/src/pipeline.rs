//! Stage-by-stage orchestration through on-disk artifacts.
//!
//! Each stage reads its inputs from the output directory and writes its own
//! artifacts there, and `run` simply chains the stages. Running the stages one
//! at a time therefore reproduces a full run byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::behavior::{classify_transitions, read_enriched_csv, write_enriched_csv, BehaviorType};
use crate::config::{LogFormat, RunConfig};
use crate::error::{Error, Result};
use crate::evaluation::{
    chrono_split, compare_report, grid_search, permutation_importance, read_importance_csv, read_predictions_csv,
    runs_from_records, ts_cv_folds, write_cv_table, write_importance_csv, write_predictions_csv, FeatureImportance,
    GridResult, ModelRun,
};
use crate::event_log::{log_summary, parse_csv, parse_xes, write_canonical_csv, CsvOptions, EventLog};
use crate::features::{build_feature_matrix, reconstruct, FeatureMatrix, FeatureSet};
use crate::models::{fit_ar, fit_gbt, fit_naive, GbtParams, TrainedModel};
use crate::rng::{derive_seed, label_id};
use crate::timeseries::{assemble_panel, read_panel_csv, write_panel_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Enrich,
    Panel,
    Features,
    Tune,
    Train,
    Evaluate,
    Importance,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Enrich,
        Stage::Panel,
        Stage::Features,
        Stage::Tune,
        Stage::Train,
        Stage::Evaluate,
        Stage::Importance,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Enrich => "enrich",
            Stage::Panel => "panel",
            Stage::Features => "features",
            Stage::Tune => "tune",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Importance => "importance",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            let names: Vec<_> = Stage::ALL.iter().map(|s| s.name()).collect();
            format!("unknown stage `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Which feature sets to build, tune and evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSelection {
    Baseline,
    Actor,
    #[default]
    Both,
}

impl FeatureSelection {
    pub fn sets(self) -> Vec<FeatureSet> {
        match self {
            FeatureSelection::Baseline => vec![FeatureSet::Baseline],
            FeatureSelection::Actor => vec![FeatureSet::ActorEnriched],
            FeatureSelection::Both => vec![FeatureSet::Baseline, FeatureSet::ActorEnriched],
        }
    }

    /// Permutation importance is computed for the actor-enriched model when it exists.
    pub fn importance_set(self) -> FeatureSet {
        match self {
            FeatureSelection::Baseline => FeatureSet::Baseline,
            _ => FeatureSet::ActorEnriched,
        }
    }
}

impl FromStr for FeatureSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(FeatureSelection::Baseline),
            "actor" => Ok(FeatureSelection::Actor),
            "both" => Ok(FeatureSelection::Both),
            _ => Err(format!("unknown feature set `{s}` (expected baseline, actor or both)")),
        }
    }
}

pub const EVENTS_CSV: &str = "events.csv";
pub const ENRICHED_CSV: &str = "enriched_log.csv";
pub const PANEL_CSV: &str = "panel.csv";
pub const CV_TABLE_CSV: &str = "cv_table.csv";
pub const TUNING_JSON: &str = "tuning.json";
pub const AR_MODEL_JSON: &str = "model_ar_diff.json";
pub const NAIVE_MODEL_JSON: &str = "model_naive.json";
pub const PREDICTIONS_CSV: &str = "predictions.csv";
pub const IMPORTANCE_CSV: &str = "importance.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const REPORT_MD: &str = "report.md";
pub const MANIFEST_JSON: &str = "run_manifest.json";

pub fn features_csv(set: FeatureSet) -> String {
    format!("features_{}.csv", set.as_str())
}

pub fn gbt_model_json(set: FeatureSet) -> String {
    format!("model_gbt_{}.json", set.as_str())
}

/// Winning grid candidate per feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningChoice {
    pub candidate: usize,
    pub params: GbtParams,
    pub cv_rmse: f64,
    pub disqualified: usize,
}

/// Artifacts and counters produced by one stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub outputs: Vec<String>,
    pub counters: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    #[serde(flatten)]
    pub outcome: StageOutcome,
    pub seconds: f64,
}

/// Everything needed to reproduce a run. Timings live here and only here.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub feature_sets: FeatureSelection,
    pub seeds: BTreeMap<String, u64>,
    pub config: RunConfig,
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

pub struct Pipeline {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub selection: FeatureSelection,
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Reads a log file in the given format.
pub fn read_log(path: &Path, format: LogFormat, csv: &CsvOptions) -> Result<EventLog> {
    let file =
        File::open(path).map_err(|e| Error::Config(format!("dataset.path: cannot open {}: {e}", path.display())))?;
    let name = path.display().to_string();
    match format {
        LogFormat::Csv => parse_csv(BufReader::new(file), &name, csv),
        LogFormat::Xes => parse_xes(BufReader::new(file), &name),
    }
}

impl Pipeline {
    pub fn new(config: RunConfig, out_dir: PathBuf, selection: FeatureSelection) -> Self {
        Pipeline {
            config,
            out_dir,
            selection,
        }
    }

    pub fn bootstrap_seed(&self) -> u64 {
        derive_seed(self.config.models.seed, &[label_id("bootstrap")])
    }

    pub fn importance_seed(&self) -> u64 {
        derive_seed(self.config.models.seed, &[label_id("importance")])
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn open(&self, name: &str) -> Result<BufReader<File>> {
        let path = self.path(name);
        File::open(&path)
            .map(BufReader::new)
            .map_err(|_| Error::MissingArtifact(path))
    }

    fn write(&self, name: &str, bytes: &[u8], outputs: &mut Vec<String>) -> Result<()> {
        fs::create_dir_all(&self.out_dir)?;
        fs::write(self.path(name), bytes)?;
        outputs.push(name.to_string());
        Ok(())
    }

    fn read_events(&self) -> Result<EventLog> {
        parse_csv(self.open(EVENTS_CSV)?, EVENTS_CSV, &CsvOptions::default())
    }

    fn read_features(&self, set: FeatureSet) -> Result<FeatureMatrix> {
        FeatureMatrix::read_csv(self.open(&features_csv(set))?, set)
    }

    fn read_model(&self, name: &str) -> Result<TrainedModel> {
        TrainedModel::from_json(self.open(name)?)
    }

    fn read_tuning(&self) -> Result<BTreeMap<String, TuningChoice>> {
        Ok(serde_json::from_reader(self.open(TUNING_JSON)?)?)
    }

    fn split(&self, m: &FeatureMatrix) -> Result<(FeatureMatrix, FeatureMatrix)> {
        let s = chrono_split(m.n_rows(), self.config.evaluation.train_fraction)?;
        Ok((m.slice_rows(s.train), m.slice_rows(s.holdout)))
    }

    /// Runs one stage; errors carry the stage name.
    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        let mut outputs = Vec::new();
        let mut counters = BTreeMap::new();
        let result = match stage {
            Stage::Ingest => self.ingest(&mut outputs, &mut counters),
            Stage::Enrich => self.enrich(&mut outputs, &mut counters),
            Stage::Panel => self.panel(&mut outputs, &mut counters),
            Stage::Features => self.features(&mut outputs, &mut counters),
            Stage::Tune => self.tune(&mut outputs, &mut counters),
            Stage::Train => self.train(&mut outputs, &mut counters),
            Stage::Evaluate => self.evaluate(&mut outputs, &mut counters),
            Stage::Importance => self.importance(&mut outputs, &mut counters),
            Stage::Report => self.report(&mut outputs, &mut counters),
        };
        result.map_err(|e| e.in_stage(stage.name()))?;
        Ok(StageOutcome {
            stage,
            outputs,
            counters,
        })
    }

    fn ingest(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let ds = &self.config.dataset;
        let path = ds
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("dataset.path is not set".into()))?;
        let format = self.config.dataset_format().unwrap_or(LogFormat::Csv);
        let log = read_log(path, format, &ds.csv_options())?.trim_boundary_days(ds.trim_boundary_days);
        let d = log.diagnostics();
        let summary = log_summary(&log);
        counters.insert("total_rows".into(), json!(d.total_rows));
        counters.insert("skipped_rows".into(), json!(d.skipped_rows));
        counters.insert("unknown_resources".into(), json!(d.unknown_resources));
        counters.insert("synthesized_case_ids".into(), json!(d.synthesized_case_ids));
        counters.insert("trimmed_cases".into(), json!(d.trimmed_cases));
        counters.insert("events".into(), json!(summary.n_events));
        counters.insert("cases".into(), json!(summary.n_cases));
        counters.insert("resources".into(), json!(summary.n_resources));
        let bytes = to_bytes(|b| write_canonical_csv(&log, b))?;
        self.write(EVENTS_CSV, &bytes, outputs)
    }

    fn enrich(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let log = self.read_events()?;
        let transitions = classify_transitions(&log);
        counters.insert("transitions".into(), json!(transitions.len()));
        for b in BehaviorType::ALL {
            let n = transitions.iter().filter(|t| t.behavior == b).count();
            counters.insert(format!("count_{}", b.as_str()), json!(n));
        }
        let bytes = to_bytes(|b| write_enriched_csv(&transitions, b))?;
        self.write(ENRICHED_CSV, &bytes, outputs)
    }

    fn panel(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let log = self.read_events()?;
        let transitions = read_enriched_csv(self.open(ENRICHED_CSV)?)?;
        let (panel, diag) = assemble_panel(&log, &transitions, self.config.features.calendar_mode())?;
        counters.insert("days".into(), json!(panel.len()));
        counters.insert("dropped_transitions".into(), json!(diag.dropped_transitions));
        counters.insert("calendar_gap_days".into(), json!(diag.calendar_gap_days));
        let bytes = to_bytes(|b| write_panel_csv(&panel, b))?;
        self.write(PANEL_CSV, &bytes, outputs)
    }

    fn features(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let panel = read_panel_csv(self.open(PANEL_CSV)?)?;
        let opts = self.config.features.options();
        for set in self.selection.sets() {
            let m = build_feature_matrix(&panel, set, &opts)?;
            counters.insert(format!("{}_rows", set.as_str()), json!(m.n_rows()));
            counters.insert(format!("{}_features", set.as_str()), json!(m.n_features()));
            let bytes = to_bytes(|b| m.write_csv(b))?;
            self.write(&features_csv(set), &bytes, outputs)?;
        }
        Ok(())
    }

    fn tune(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let grid = self.config.models.candidates()?;
        let mut results: Vec<(&'static str, GridResult)> = Vec::new();
        let mut choices = BTreeMap::new();
        for set in self.selection.sets() {
            let (train, _) = self.split(&self.read_features(set)?)?;
            let folds = ts_cv_folds(train.n_rows(), self.config.evaluation.folds)?;
            let result = grid_search(&train, &grid, &folds)?;
            let best = &result.candidates[result.best_index];
            let disqualified = result.candidates.iter().filter(|c| c.error.is_some()).count();
            counters.insert(format!("{}_train_rows", set.as_str()), json!(train.n_rows()));
            counters.insert(format!("{}_disqualified", set.as_str()), json!(disqualified));
            choices.insert(
                set.as_str().to_string(),
                TuningChoice {
                    candidate: result.best_index,
                    params: result.best,
                    cv_rmse: best.mean_rmse.expect("winner has a score"),
                    disqualified,
                },
            );
            results.push((set.as_str(), result));
        }
        let refs: Vec<(&str, &GridResult)> = results.iter().map(|(s, r)| (*s, r)).collect();
        let table = to_bytes(|b| write_cv_table(&refs, b))?;
        self.write(CV_TABLE_CSV, &table, outputs)?;
        let mut tuning = serde_json::to_vec_pretty(&choices)?;
        tuning.push(b'\n');
        self.write(TUNING_JSON, &tuning, outputs)
    }

    fn train(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let tuning = self.read_tuning()?;
        let mut last_train_target = None;
        for set in self.selection.sets() {
            let choice = tuning
                .get(set.as_str())
                .ok_or_else(|| Error::InvalidArgument(format!("{TUNING_JSON} has no entry for `{}`", set.as_str())))?;
            let (train, _) = self.split(&self.read_features(set)?)?;
            last_train_target = train.target_dates.last().copied();
            let model = fit_gbt(&train, &choice.params)?;
            counters.insert(format!("gbt_{}_trees", set.as_str()), json!(model.trees.len()));
            let bytes = to_bytes(|b| model.to_json(b))?;
            self.write(&gbt_model_json(set), &bytes, outputs)?;
        }

        // The benchmark sees the same TT history the tree models trained on.
        let panel = read_panel_csv(self.open(PANEL_CSV)?)?;
        let cutoff = last_train_target.expect("at least one feature set");
        let n_hist = panel.calendar.dates().iter().take_while(|d| **d <= cutoff).count();
        let p_max = self.config.models.ar_p_max;
        let ar = fit_ar(&panel.tt[..n_hist], p_max)?;
        let coef = ar.ar.as_ref().expect("ar model");
        counters.insert("ar_order".into(), json!(coef.order));
        counters.insert("ar_history_days".into(), json!(n_hist));
        let bytes = to_bytes(|b| ar.to_json(b))?;
        self.write(AR_MODEL_JSON, &bytes, outputs)?;
        let bytes = to_bytes(|b| fit_naive().to_json(b))?;
        self.write(NAIVE_MODEL_JSON, &bytes, outputs)
    }

    fn holdout_run(&self, model: &TrainedModel, holdout: &FeatureMatrix, set_label: &str) -> Result<(ModelRun, usize)> {
        let unit = self.config.dataset.report_unit;
        let delta = model.predict(holdout)?;
        let tt = reconstruct(&holdout.base, &delta)?;
        Ok((
            ModelRun {
                model: model.kind.as_str().to_string(),
                feature_set: set_label.to_string(),
                dates: holdout.target_dates.clone(),
                actual: holdout.actual_next.iter().map(|v| unit.from_hours(*v)).collect(),
                predicted: tt.values.iter().map(|v| unit.from_hours(*v)).collect(),
            },
            tt.clamped,
        ))
    }

    fn evaluate(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let mut runs = Vec::new();
        let mut benchmark_holdout = None;
        for set in self.selection.sets() {
            let (_, holdout) = self.split(&self.read_features(set)?)?;
            let model = self.read_model(&gbt_model_json(set))?;
            let (run, clamped) = self.holdout_run(&model, &holdout, set.as_str())?;
            counters.insert(format!("gbt_{}_clamped", set.as_str()), json!(clamped));
            runs.push(run);
            benchmark_holdout.get_or_insert(holdout);
        }
        // Benchmarks only read TT history, which every feature set carries.
        let holdout = benchmark_holdout.expect("at least one feature set");
        for name in [AR_MODEL_JSON, NAIVE_MODEL_JSON] {
            let model = self.read_model(name)?;
            let (run, clamped) = self.holdout_run(&model, &holdout, FeatureSet::Baseline.as_str())?;
            counters.insert(format!("{}_clamped", model.kind.as_str()), json!(clamped));
            runs.push(run);
        }
        counters.insert("holdout_days".into(), json!(holdout.n_rows()));
        let records: Vec<_> = runs.iter().flat_map(ModelRun::records).collect();
        let bytes = to_bytes(|b| write_predictions_csv(&records, b))?;
        self.write(PREDICTIONS_CSV, &bytes, outputs)
    }

    fn importance(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let set = self.selection.importance_set();
        let (_, holdout) = self.split(&self.read_features(set)?)?;
        let model = self.read_model(&gbt_model_json(set))?;
        let unit = self.config.dataset.report_unit;
        let table: Vec<FeatureImportance> = permutation_importance(
            &model,
            &holdout,
            self.config.evaluation.importance_repeats,
            self.importance_seed(),
        )?
        .into_iter()
        .map(|f| FeatureImportance {
            delta_rmse: unit.from_hours(f.delta_rmse),
            ..f
        })
        .collect();
        let used = table.iter().filter(|f| f.delta_rmse != 0.0).count();
        counters.insert("nonzero_features".into(), json!(used));
        let bytes = to_bytes(|b| write_importance_csv(&table, b))?;
        self.write(IMPORTANCE_CSV, &bytes, outputs)
    }

    fn report(&self, outputs: &mut Vec<String>, counters: &mut BTreeMap<String, Value>) -> Result<()> {
        let records = read_predictions_csv(self.open(PREDICTIONS_CSV)?)?;
        let importance = read_importance_csv(self.open(IMPORTANCE_CSV)?)?;
        let runs = runs_from_records(&records);
        let report = compare_report(
            &runs,
            importance,
            Some(self.selection.importance_set().as_str().to_string()),
            self.config.dataset.report_unit,
            &self.config.evaluation.bootstrap(),
            self.bootstrap_seed(),
        )?;
        counters.insert("rows".into(), json!(report.rows.len()));
        self.write(METRICS_JSON, report.to_json_string()?.as_bytes(), outputs)?;
        self.write(REPORT_MD, report.render_markdown(20).as_bytes(), outputs)
    }

    /// Renames whatever `stage` and the stages before it wrote to `*.partial`.
    fn mark_partial(&self, upto: Stage) {
        let mut names = vec![
            EVENTS_CSV,
            ENRICHED_CSV,
            PANEL_CSV,
            CV_TABLE_CSV,
            TUNING_JSON,
            AR_MODEL_JSON,
            NAIVE_MODEL_JSON,
            PREDICTIONS_CSV,
            IMPORTANCE_CSV,
            METRICS_JSON,
            REPORT_MD,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        for set in [FeatureSet::Baseline, FeatureSet::ActorEnriched] {
            names.push(features_csv(set));
            names.push(gbt_model_json(set));
        }
        let reached: Vec<Stage> = Stage::ALL
            .iter()
            .copied()
            .take_while(|s| *s != upto)
            .chain([upto])
            .collect();
        for name in names {
            if !reached.contains(&producer(&name)) {
                continue;
            }
            let path = self.path(&name);
            if path.exists() {
                let partial = self.path(&format!("{name}.partial"));
                if let Err(e) = fs::rename(&path, &partial) {
                    log::warn!("could not mark {} as partial: {e}", path.display());
                }
            }
        }
    }

    /// Runs every stage in order and writes the manifest. On failure the
    /// artifacts written so far are renamed to `*.partial`.
    pub fn run(&self) -> Result<RunManifest> {
        let started = Instant::now();
        let mut stages = Vec::with_capacity(Stage::ALL.len());
        for stage in Stage::ALL {
            let t = Instant::now();
            log::info!("stage {stage}");
            match self.run_stage(stage) {
                Ok(outcome) => stages.push(StageTiming {
                    outcome,
                    seconds: t.elapsed().as_secs_f64(),
                }),
                Err(e) => {
                    self.mark_partial(stage);
                    return Err(e);
                }
            }
        }
        let mut seeds = BTreeMap::new();
        seeds.insert("global".to_string(), self.config.models.seed);
        seeds.insert("gbt".to_string(), self.config.models.seed);
        seeds.insert("bootstrap".to_string(), self.bootstrap_seed());
        seeds.insert("importance".to_string(), self.importance_seed());
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            feature_sets: self.selection,
            seeds,
            config: self.config.clone(),
            stages,
            total_seconds: started.elapsed().as_secs_f64(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.path(MANIFEST_JSON), bytes).map_err(|e| Error::from(e).in_stage("manifest"))?;
        Ok(manifest)
    }
}

fn producer(artifact: &str) -> Stage {
    match artifact {
        EVENTS_CSV => Stage::Ingest,
        ENRICHED_CSV => Stage::Enrich,
        PANEL_CSV => Stage::Panel,
        CV_TABLE_CSV | TUNING_JSON => Stage::Tune,
        PREDICTIONS_CSV => Stage::Evaluate,
        IMPORTANCE_CSV => Stage::Importance,
        METRICS_JSON | REPORT_MD => Stage::Report,
        a if a.starts_with("features_") => Stage::Features,
        _ => Stage::Train,
    }
}
