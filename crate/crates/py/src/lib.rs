//! Python bindings: `import actor_tt`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use actor_tt::behavior::{classify_transitions, Transition};
use actor_tt::config::{LogFormat, RunConfig};
use actor_tt::evaluation::{chrono_split, compute_metrics as metrics};
use actor_tt::event_log::{log_summary, Event, EventLog as CoreLog, TimestampParser};
use actor_tt::features::{
    build_feature_matrix, reconstruct, FeatureMatrix as CoreMatrix, FeatureOptions, FeatureSet, PeakMode,
};
use actor_tt::models::{fit_ar, fit_gbt, fit_naive, GbtParams, TrainedModel};
use actor_tt::pipeline::{read_log, FeatureSelection, Pipeline};
use actor_tt::timeseries::{assemble_panel, CalendarMode, SeriesPanel, ACTOR_COLUMNS};

create_exception!(actor_tt, ActorTtError, PyException);

fn err(e: actor_tt::Error) -> PyErr {
    ActorTtError::new_err(e.to_string())
}

/// Parses a serde-serializable value into Python objects through `json.loads`.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ActorTtError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn feature_set(name: &str) -> PyResult<FeatureSet> {
    FeatureSet::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown feature set `{name}`")))
}

/// A parsed event log.
#[pyclass(module = "actor_tt", frozen)]
pub struct EventLog {
    inner: CoreLog,
}

#[pymethods]
impl EventLog {
    /// Reads a CSV or XES (optionally gzipped) log. Column mapping and
    /// timestamp settings come from `config` when given.
    #[staticmethod]
    #[pyo3(signature = (path, format=None, config=None))]
    fn read(path: PathBuf, format: Option<&str>, config: Option<PathBuf>) -> PyResult<Self> {
        let cfg = match config {
            Some(p) => RunConfig::load(&p).map_err(err)?,
            None => RunConfig::default(),
        };
        let format = match format {
            Some(f) => f.parse::<LogFormat>().map_err(PyValueError::new_err)?,
            None => LogFormat::infer(&path),
        };
        let inner = read_log(&path, format, &cfg.dataset.csv_options()).map_err(err)?;
        Ok(EventLog { inner })
    }

    /// Builds a log from `(case_id, activity, timestamp, resource)` tuples
    /// with ISO 8601 timestamps.
    #[staticmethod]
    fn from_records(records: Vec<(String, String, String, String)>) -> PyResult<Self> {
        let parser = TimestampParser::utc();
        let events = records
            .iter()
            .enumerate()
            .map(|(i, (case, activity, ts, resource))| {
                let t = parser
                    .parse(ts)
                    .map_err(|e| PyValueError::new_err(format!("record {i}: {e}")))?;
                Event::new(case, activity, t, resource).map_err(|e| PyValueError::new_err(format!("record {i}: {e}")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(EventLog {
            inner: CoreLog::new("python", events),
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Event, case, resource and activity counts plus the time span.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &log_summary(&self.inner))
    }

    /// Behavior-labelled transitions as a list of dicts.
    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let rows = classify_transitions(&self.inner)
            .iter()
            .map(|t| transition_dict(py, t))
            .collect::<PyResult<Vec<_>>>()?;
        PyList::new(py, rows)
    }

    fn __repr__(&self) -> String {
        format!(
            "EventLog({} events from {})",
            self.inner.len(),
            self.inner.source_name()
        )
    }
}

fn transition_dict<'py>(py: Python<'py>, t: &Transition) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("case_id", &t.case_id)?;
    d.set_item("from_activity", &t.from_event.activity)?;
    d.set_item("to_activity", &t.to_event.activity)?;
    d.set_item("from_resource", &t.from_event.resource)?;
    d.set_item("to_resource", &t.to_event.resource)?;
    d.set_item("behavior", t.behavior.as_str())?;
    d.set_item("duration_seconds", t.duration_seconds)?;
    d.set_item("date", t.date.to_string())?;
    Ok(d)
}

/// Daily TT and behavior series.
#[pyclass(module = "actor_tt", frozen)]
pub struct Panel {
    inner: SeriesPanel,
}

#[pymethods]
impl Panel {
    #[staticmethod]
    #[pyo3(signature = (log, dense=false))]
    fn from_log(log: &EventLog, dense: bool) -> PyResult<Self> {
        let mode = if dense {
            CalendarMode::Dense
        } else {
            CalendarMode::CaseStart
        };
        let transitions = classify_transitions(&log.inner);
        let (inner, _) = assemble_panel(&log.inner, &transitions, mode).map_err(err)?;
        Ok(Panel { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dates(&self) -> Vec<String> {
        self.inner.calendar.dates().iter().map(|d| d.to_string()).collect()
    }

    /// Mean throughput time in hours per day.
    #[getter]
    fn tt(&self) -> Vec<f64> {
        self.inner.tt.clone()
    }

    /// One series per actor column (`Count_C` ... `Time_HB_seconds`).
    fn actor_columns<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, name) in ACTOR_COLUMNS.iter().enumerate() {
            d.set_item(name, self.inner.actor_column(k))?;
        }
        Ok(d)
    }
}

/// Supervised rows for one feature set.
#[pyclass(module = "actor_tt", frozen)]
pub struct FeatureMatrix {
    inner: CoreMatrix,
}

#[pymethods]
impl FeatureMatrix {
    /// `feature_set` is "baseline" or "actor".
    #[staticmethod]
    #[pyo3(signature = (panel, feature_set="actor", causal_peaks=false))]
    fn build(panel: &Panel, feature_set: &str, causal_peaks: bool) -> PyResult<Self> {
        let opts = FeatureOptions {
            peak_mode: if causal_peaks {
                PeakMode::Causal
            } else {
                PeakMode::Paper
            },
            ..FeatureOptions::default()
        };
        let inner = build_feature_matrix(&panel.inner, self::feature_set(feature_set)?, &opts).map_err(err)?;
        Ok(FeatureMatrix { inner })
    }

    /// Chronological `(train, holdout)` split.
    #[pyo3(signature = (train_fraction=0.8))]
    fn split(&self, train_fraction: f64) -> PyResult<(FeatureMatrix, FeatureMatrix)> {
        let s = chrono_split(self.inner.n_rows(), train_fraction).map_err(err)?;
        Ok((
            FeatureMatrix {
                inner: self.inner.slice_rows(s.train),
            },
            FeatureMatrix {
                inner: self.inner.slice_rows(s.holdout),
            },
        ))
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    #[getter]
    fn origin_dates(&self) -> Vec<String> {
        self.inner.origin_dates.iter().map(|d| d.to_string()).collect()
    }

    #[getter]
    fn target_dates(&self) -> Vec<String> {
        self.inner.target_dates.iter().map(|d| d.to_string()).collect()
    }

    /// Smoothed ΔTT of the next day.
    #[getter]
    fn target(&self) -> Vec<f64> {
        self.inner.target.clone()
    }

    #[getter]
    fn base(&self) -> Vec<f64> {
        self.inner.base.clone()
    }

    #[getter]
    fn actual_next(&self) -> Vec<f64> {
        self.inner.actual_next.clone()
    }

    /// Feature values, one list per row.
    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n_rows()).map(|i| self.inner.row(i).to_vec()).collect()
    }
}

/// A trained forecaster (`naive`, `ar_diff` or `gbt`).
#[pyclass(module = "actor_tt", frozen)]
pub struct Model {
    inner: TrainedModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (train, n_estimators=1000, learning_rate=0.1, max_depth=5, feature_fraction=0.9,
                        bagging_fraction=0.9, min_samples_leaf=5, seed=42))]
    fn fit_gbt(
        py: Python<'_>,
        train: &FeatureMatrix,
        n_estimators: usize,
        learning_rate: f64,
        max_depth: usize,
        feature_fraction: f64,
        bagging_fraction: f64,
        min_samples_leaf: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let params = GbtParams {
            n_estimators,
            learning_rate,
            max_depth,
            feature_fraction,
            bagging_fraction,
            min_samples_leaf,
            seed,
        };
        let inner = py.detach(|| fit_gbt(&train.inner, &params)).map_err(err)?;
        Ok(Model { inner })
    }

    /// AR on first differences of a TT history, order chosen by AIC.
    #[staticmethod]
    #[pyo3(signature = (tt, p_max=5))]
    fn fit_ar(tt: Vec<f64>, p_max: usize) -> PyResult<Self> {
        Ok(Model {
            inner: fit_ar(&tt, p_max).map_err(err)?,
        })
    }

    #[staticmethod]
    fn naive() -> Self {
        Model { inner: fit_naive() }
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    /// Predicted ΔTT per row.
    fn predict(&self, rows: &FeatureMatrix) -> PyResult<Vec<f64>> {
        self.inner.predict(&rows.inner).map_err(err)
    }

    /// Reconstructed next-day TT per row, clamped at zero.
    fn predict_tt(&self, rows: &FeatureMatrix) -> PyResult<Vec<f64>> {
        let delta = self.inner.predict(&rows.inner).map_err(err)?;
        Ok(reconstruct(&rows.inner.base, &delta).map_err(err)?.values)
    }

    fn to_json(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.to_json(&mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| ActorTtError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Model {
            inner: TrainedModel::from_json(text.as_bytes()).map_err(err)?,
        })
    }
}

/// RMSE, MAE and R² (`None` for constant actuals).
#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, actual: Vec<f64>, predicted: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &metrics(&actual, &predicted).map_err(err)?)
}

/// Loads and validates a TOML config, returning it with defaults filled in.
#[pyfunction]
fn load_config<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &RunConfig::load(&path).map_err(err)?)
}

/// Runs the whole pipeline and returns the run manifest.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None, seed=None, feature_set="both"))]
fn run_pipeline<'py>(
    py: Python<'py>,
    config: PathBuf,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    feature_set: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = RunConfig::load(&config).map_err(err)?;
    if let Some(s) = seed {
        cfg.models.seed = s;
    }
    let selection: FeatureSelection = feature_set.parse().map_err(PyValueError::new_err)?;
    let out = out_dir.unwrap_or_else(|| cfg.output.dir.clone());
    let manifest = py.detach(|| Pipeline::new(cfg, out, selection).run()).map_err(err)?;
    to_py(py, &manifest)
}

#[pymodule]
#[pyo3(name = "actor_tt")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ActorTtError", m.py().get_type::<ActorTtError>())?;
    m.add_class::<EventLog>()?;
    m.add_class::<Panel>()?;
    m.add_class::<FeatureMatrix>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
