//! Holdout comparison of baseline and actor-enriched runs plus benchmarks.

use std::fmt::Write as _;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::importance::FeatureImportance;
use super::metrics::{bootstrap_metrics, compute_metrics, BootstrapOptions, Interval};
use crate::error::{Error, Result};

/// Unit of every reported TT value and error. Internally TT is in hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportUnit {
    #[default]
    Hours,
    Days,
}

impl ReportUnit {
    pub fn from_hours(self, hours: f64) -> f64 {
        match self {
            ReportUnit::Hours => hours,
            ReportUnit::Days => hours / 24.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReportUnit::Hours => "hours",
            ReportUnit::Days => "days",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub date: NaiveDate,
    pub actual_tt: f64,
    pub predicted_tt: f64,
    pub model: String,
    pub feature_set: String,
}

pub fn write_predictions_csv<W: Write>(records: &[PredictionRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "actual_tt", "predicted_tt", "model", "feature_set"])?;
    for r in records {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.actual_tt.to_string(),
            r.predicted_tt.to_string(),
            r.model.clone(),
            r.feature_set.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions_csv<R: Read>(source: R) -> Result<Vec<PredictionRecord>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || Error::InvalidArgument(format!("predictions row {}: malformed", i + 2));
        let num = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
        out.push(PredictionRecord {
            date: rec
                .get(0)
                .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
                .ok_or_else(bad)?,
            actual_tt: num(1)?,
            predicted_tt: num(2)?,
            model: rec.get(3).ok_or_else(bad)?.to_string(),
            feature_set: rec.get(4).ok_or_else(bad)?.to_string(),
        });
    }
    Ok(out)
}

/// One model's holdout forecasts for one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRun {
    pub model: String,
    pub feature_set: String,
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl ModelRun {
    pub fn records(&self) -> impl Iterator<Item = PredictionRecord> + '_ {
        (0..self.dates.len()).map(|i| PredictionRecord {
            date: self.dates[i],
            actual_tt: self.actual[i],
            predicted_tt: self.predicted[i],
            model: self.model.clone(),
            feature_set: self.feature_set.clone(),
        })
    }
}

/// Groups prediction records into runs, keeping first-appearance order.
pub fn runs_from_records(records: &[PredictionRecord]) -> Vec<ModelRun> {
    let mut runs: Vec<ModelRun> = Vec::new();
    for r in records {
        let run = match runs
            .iter_mut()
            .position(|x| x.model == r.model && x.feature_set == r.feature_set)
        {
            Some(i) => &mut runs[i],
            None => {
                runs.push(ModelRun {
                    model: r.model.clone(),
                    feature_set: r.feature_set.clone(),
                    dates: Vec::new(),
                    actual: Vec::new(),
                    predicted: Vec::new(),
                });
                runs.last_mut().unwrap()
            }
        };
        run.dates.push(r.date);
        run.actual.push(r.actual_tt);
        run.predicted.push(r.predicted_tt);
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub rmse_ci: Interval,
    pub mae_ci: Interval,
    pub r2_ci: Option<Interval>,
}

/// `baseline - actor`; positive means the actor features helped on RMSE/MAE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub label: String,
    pub baseline: Option<MetricSummary>,
    pub actor: Option<MetricSummary>,
    pub delta: Option<MetricDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub unit: ReportUnit,
    pub holdout_days: usize,
    pub holdout_start: NaiveDate,
    pub holdout_end: NaiveDate,
    pub bootstrap: BootstrapOptions,
    pub bootstrap_seed: u64,
    pub rows: Vec<ComparisonRow>,
    pub importance_feature_set: Option<String>,
    pub importance: Vec<FeatureImportance>,
    pub predictions: Vec<PredictionRecord>,
}

pub const BASELINE: &str = "baseline";
pub const ACTOR: &str = "actor";

/// Display label for a model key; unknown keys are shown as-is.
pub fn model_label(model: &str) -> &str {
    match model {
        "gbt" => "GBT",
        "ar_diff" => "ARIMA (Benchmark)",
        "naive" => "Random walk",
        other => other,
    }
}

fn widen_to(ci: Interval, point: f64) -> Interval {
    Interval {
        low: ci.low.min(point),
        high: ci.high.max(point),
    }
}

fn summarize(run: &ModelRun, opts: &BootstrapOptions, seed: u64) -> Result<MetricSummary> {
    let point = compute_metrics(&run.actual, &run.predicted)?;
    let ci = bootstrap_metrics(&run.actual, &run.predicted, opts, seed)?;
    // Percentile intervals of skewed statistics can miss the point estimate;
    // the report always brackets it.
    Ok(MetricSummary {
        rmse: point.rmse,
        mae: point.mae,
        r2: point.r2,
        rmse_ci: widen_to(ci.rmse, point.rmse),
        mae_ci: widen_to(ci.mae, point.mae),
        r2_ci: ci.r2.zip(point.r2).map(|(c, p)| widen_to(c, p)),
    })
}

/// Builds the comparison table. Every run must cover the same holdout days;
/// all runs share one bootstrap seed so their intervals use paired resamples.
pub fn compare_report(
    runs: &[ModelRun],
    importance: Vec<FeatureImportance>,
    importance_feature_set: Option<String>,
    unit: ReportUnit,
    opts: &BootstrapOptions,
    seed: u64,
) -> Result<EvaluationReport> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no model runs to report".into()))?;
    for run in runs {
        if run.dates != first.dates {
            return Err(Error::HoldoutMismatch(format!(
                "{}/{} covers {} days, {}/{} covers {}",
                run.model,
                run.feature_set,
                run.dates.len(),
                first.model,
                first.feature_set,
                first.dates.len()
            )));
        }
        if run.actual.len() != run.dates.len() || run.predicted.len() != run.dates.len() {
            return Err(Error::LengthMismatch {
                expected: run.dates.len(),
                actual: run.predicted.len().min(run.actual.len()),
            });
        }
    }
    let (Some(&start), Some(&end)) = (first.dates.first(), first.dates.last()) else {
        return Err(Error::InvalidArgument("empty holdout".into()));
    };

    let mut models: Vec<&str> = Vec::new();
    for run in runs {
        if !models.contains(&run.model.as_str()) {
            models.push(&run.model);
        }
    }
    let find = |model: &str, set: &str| runs.iter().find(|r| r.model == model && r.feature_set == set);
    let mut rows = Vec::with_capacity(models.len());
    for model in models {
        let baseline = find(model, BASELINE).map(|r| summarize(r, opts, seed)).transpose()?;
        let actor = find(model, ACTOR).map(|r| summarize(r, opts, seed)).transpose()?;
        let delta = baseline.zip(actor).map(|(b, a)| MetricDelta {
            rmse: b.rmse - a.rmse,
            mae: b.mae - a.mae,
            r2: b.r2.zip(a.r2).map(|(rb, ra)| rb - ra),
        });
        rows.push(ComparisonRow {
            model: model.to_string(),
            label: model_label(model).to_string(),
            baseline,
            actor,
            delta,
        });
    }

    Ok(EvaluationReport {
        unit,
        holdout_days: first.dates.len(),
        holdout_start: start,
        holdout_end: end,
        bootstrap: *opts,
        bootstrap_seed: seed,
        rows,
        importance_feature_set,
        importance,
        predictions: runs.iter().flat_map(ModelRun::records).collect(),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "--".to_string(), |x| format!("{x:.4}"))
}

fn cell_ci(v: Option<f64>, ci: Option<Interval>) -> String {
    match (v, ci) {
        (Some(x), Some(c)) => format!("{x:.4} [{:.4}, {:.4}]", c.low, c.high),
        (v, _) => cell(v),
    }
}

impl EvaluationReport {
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json<R: Read>(source: R) -> Result<EvaluationReport> {
        Ok(serde_json::from_reader(source)?)
    }

    /// Markdown tables: metrics with 95% intervals, then importance.
    pub fn render_markdown(&self, top_features: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Holdout evaluation\n");
        let _ = writeln!(
            out,
            "Holdout: {} to {} ({} days). Errors in {}. Intervals: {} bootstrap replicates{}.\n",
            self.holdout_start,
            self.holdout_end,
            self.holdout_days,
            self.unit.as_str(),
            self.bootstrap.replicates,
            self.bootstrap
                .block_length
                .map_or(String::new(), |l| format!(", blocks of {l} days")),
        );
        for (name, get) in [
            (
                "RMSE",
                (|m: &MetricSummary| (Some(m.rmse), Some(m.rmse_ci))) as fn(&MetricSummary) -> _,
            ),
            ("MAE", |m: &MetricSummary| (Some(m.mae), Some(m.mae_ci))),
            ("R²", |m: &MetricSummary| (m.r2, m.r2_ci)),
        ] {
            let _ = writeln!(out, "## {name}\n");
            let _ = writeln!(out, "| Model | Baseline | Actor | Δ |");
            let _ = writeln!(out, "|---|---|---|---|");
            for row in &self.rows {
                let b = row.baseline.as_ref().map(get);
                let a = row.actor.as_ref().map(get);
                let d = row.delta.and_then(|d| match name {
                    "RMSE" => Some(d.rmse),
                    "MAE" => Some(d.mae),
                    _ => d.r2,
                });
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    row.label,
                    b.map_or_else(|| "--".into(), |(v, c)| cell_ci(v, c)),
                    a.map_or_else(|| "--".into(), |(v, c)| cell_ci(v, c)),
                    cell(d),
                );
            }
            out.push('\n');
        }
        if !self.importance.is_empty() {
            let _ = writeln!(
                out,
                "## Permutation importance ({})\n",
                self.importance_feature_set.as_deref().unwrap_or("gbt")
            );
            let _ = writeln!(out, "| Rank | Feature | ΔRMSE |");
            let _ = writeln!(out, "|---|---|---|");
            for (i, f) in self.importance.iter().take(top_features).enumerate() {
                let _ = writeln!(out, "| {} | {} | {:.4} |", i + 1, f.feature, f.delta_rmse);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(model: &str, set: &str, predicted: Vec<f64>) -> ModelRun {
        let d0 = NaiveDate::from_ymd_opt(2022, 5, 1).unwrap();
        let n = predicted.len();
        ModelRun {
            model: model.into(),
            feature_set: set.into(),
            dates: (0..n).map(|i| d0 + chrono::Duration::days(i as i64)).collect(),
            actual: (0..n).map(|i| 10.0 + (i % 4) as f64).collect(),
            predicted,
        }
    }

    fn opts() -> BootstrapOptions {
        BootstrapOptions {
            replicates: 50,
            ..Default::default()
        }
    }

    #[test]
    fn identical_runs_have_zero_delta() {
        let p: Vec<f64> = (0..12).map(|i| 10.5 + (i % 3) as f64).collect();
        let rep = compare_report(
            &[run("gbt", BASELINE, p.clone()), run("gbt", ACTOR, p)],
            vec![],
            None,
            ReportUnit::Hours,
            &opts(),
            1,
        )
        .unwrap();
        let d = rep.rows[0].delta.unwrap();
        assert_eq!((d.rmse, d.mae, d.r2), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn delta_is_baseline_minus_actor() {
        // Constant errors of 12 and 9 give RMSE 12 and 9.
        let base = run("gbt", BASELINE, (0..12).map(|i| 22.0 + (i % 4) as f64).collect());
        let actor = run("gbt", ACTOR, (0..12).map(|i| 19.0 + (i % 4) as f64).collect());
        let ar = run("ar_diff", BASELINE, vec![11.0; 12]);
        let rep = compare_report(&[base, actor, ar], vec![], None, ReportUnit::Hours, &opts(), 1).unwrap();
        assert!((rep.rows[0].delta.unwrap().rmse - 3.0).abs() < 1e-12);
        assert_eq!(rep.rows[1].label, "ARIMA (Benchmark)");
        assert!(rep.rows[1].actor.is_none() && rep.rows[1].delta.is_none());
        let md = rep.render_markdown(10);
        assert!(md.contains("| ARIMA (Benchmark) |") && md.contains("| -- | -- |"));
        for row in &rep.rows {
            let m = row.baseline.unwrap();
            assert!(m.rmse_ci.low <= m.rmse && m.rmse <= m.rmse_ci.high);
        }
    }

    #[test]
    fn holdout_mismatch_rejected() {
        let a = run("gbt", BASELINE, vec![1.0; 12]);
        let b = run("naive", BASELINE, vec![1.0; 11]);
        assert!(matches!(
            compare_report(&[a, b], vec![], None, ReportUnit::Hours, &opts(), 1),
            Err(Error::HoldoutMismatch(_))
        ));
    }

    #[test]
    fn predictions_round_trip() {
        let runs = vec![
            run("gbt", BASELINE, vec![1.5; 3]),
            run("naive", BASELINE, vec![0.1 + 0.2; 3]),
        ];
        let records: Vec<_> = runs.iter().flat_map(ModelRun::records).collect();
        let mut buf = Vec::new();
        write_predictions_csv(&records, &mut buf).unwrap();
        let back = read_predictions_csv(buf.as_slice()).unwrap();
        assert_eq!(back, records);
        assert_eq!(runs_from_records(&back), runs);
    }

    #[test]
    fn days_scale() {
        assert_eq!(ReportUnit::Days.from_hours(36.0), 1.5);
        assert_eq!(ReportUnit::Hours.from_hours(36.0), 36.0);
    }
}
