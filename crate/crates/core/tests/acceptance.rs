//! Acceptance checks, one PASS/FAIL line each.
//!
//! Runs with `harness = false`. The process fails when a check fails. A check
//! whose external dataset is absent prints FAIL with a BLOCKED reason but does
//! not fail the process.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use actor_tt::behavior::{classify_transitions, BehaviorType, Transition};
use actor_tt::config::{LogFormat, RunConfig};
use actor_tt::evaluation::{chrono_split, compute_metrics, permutation_importance, rmse, ts_cv_folds};
use actor_tt::event_log::{Event, EventLog};
use actor_tt::features::target::first_difference;
use actor_tt::features::{
    build_feature_matrix, feature_columns, feature_names, reconstruct, FeatureMatrix, FeatureOptions, FeatureSet,
    PeakMode,
};
use actor_tt::models::tree::{fit_tree, TrainingData, TreeParams};
use actor_tt::models::{fit_ar, fit_ensemble, fit_gbt, GbtParams};
use actor_tt::pipeline::{FeatureSelection, Pipeline, METRICS_JSON};
use actor_tt::synthetic::{actor_signal_panel, fixture_log};
use actor_tt::timeseries::{assemble_panel, CalendarMode, SeriesPanel};

enum Outcome {
    Pass(String),
    Fail(String),
    /// Cannot be evaluated here; reported as FAIL without failing the run.
    Blocked(String),
}

use Outcome::{Blocked, Fail, Pass};

fn check(cond: bool, pass: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Pass(pass.into())
    } else {
        Fail(fail.into())
    }
}

fn within(elapsed: Duration, limit: Duration, outcome: Outcome) -> Outcome {
    match outcome {
        Pass(msg) if elapsed > limit => Fail(format!("{msg}, but took {elapsed:.2?} (limit {limit:?})")),
        Pass(msg) => Pass(format!("{msg} in {elapsed:.2?}")),
        other => other,
    }
}

// ---------------------------------------------------------------------------
// Random logs and the brute-force behavior oracle

fn random_log(rng: &mut ChaCha8Rng) -> EventLog {
    let origin = Utc.with_ymd_and_hms(2024, 3, 1, 8, 0, 0).unwrap();
    let n_resources = rng.gen_range(2..=5);
    let mut events = Vec::new();
    let mut case = 0;
    while events.len() < 50 {
        let n = rng.gen_range(1..=6).min(50 - events.len());
        // Coarse timestamps so different cases often share instants.
        let mut minute = rng.gen_range(0..40) * 30;
        for k in 0..n {
            if k > 0 {
                minute += rng.gen_range(1..12) * 30;
            }
            let r = rng.gen_range(0..n_resources);
            events.push(
                Event::new(
                    &format!("c{case}"),
                    &format!("a{k}"),
                    origin + chrono::Duration::minutes(minute),
                    &format!("r{r}"),
                )
                .unwrap(),
            );
        }
        case += 1;
        if rng.gen_bool(0.1) {
            break;
        }
    }
    EventLog::new("random", events)
}

/// (case, from time, to time, behavior) from a direct scan over all events.
fn oracle_transitions(log: &EventLog) -> Vec<(String, DateTime<Utc>, DateTime<Utc>, BehaviorType)> {
    let mut by_case: BTreeMap<&str, Vec<&Event>> = BTreeMap::new();
    for e in log.events() {
        by_case.entry(&e.case_id).or_default().push(e);
    }
    let mut out = Vec::new();
    for (case, mut evs) in by_case {
        evs.sort_by_key(|e| e.timestamp);
        for w in evs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let behavior = if a.resource == b.resource {
                let busy = log.events().iter().any(|e| {
                    e.resource == a.resource
                        && e.case_id != case
                        && a.timestamp < e.timestamp
                        && e.timestamp < b.timestamp
                });
                if busy {
                    BehaviorType::I
                } else {
                    BehaviorType::C
                }
            } else {
                let busy = log.events().iter().any(|e| {
                    e.resource == b.resource
                        && e.case_id != case
                        && a.timestamp <= e.timestamp
                        && e.timestamp < b.timestamp
                });
                if busy {
                    BehaviorType::HB
                } else {
                    BehaviorType::HI
                }
            };
            out.push((case.to_string(), a.timestamp, b.timestamp, behavior));
        }
    }
    out.sort_by(|x, y| (&x.0, x.1).cmp(&(&y.0, y.1)));
    out
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut total, mut seen) = (0, [0usize; 4]);
    for i in 0..25 {
        let log = random_log(&mut rng);
        let mut got: Vec<_> = classify_transitions(&log)
            .into_iter()
            .map(|t| (t.case_id, t.from_event.timestamp, t.to_event.timestamp, t.behavior))
            .collect();
        got.sort_by(|x, y| (&x.0, x.1).cmp(&(&y.0, y.1)));
        let want = oracle_transitions(&log);
        if got != want {
            let bad = got.iter().zip(&want).position(|(g, w)| g != w);
            return Fail(format!(
                "log {i}: first mismatch at {bad:?} ({} vs {} transitions)",
                got.len(),
                want.len()
            ));
        }
        total += want.len();
        for t in &want {
            seen[t.3.index()] += 1;
        }
    }
    within(
        started.elapsed(),
        Duration::from_secs(1),
        check(
            seen.iter().all(|n| *n > 0),
            format!("{total} transitions over 25 logs match the oracle (C/I/HI/HB = {seen:?})"),
            format!("oracle agrees but not every behavior occurred: {seen:?}"),
        ),
    )
}

// ---------------------------------------------------------------------------
// Aggregation

fn aggregation_mismatch(log: &EventLog, transitions: &[Transition], panel: &SeriesPanel) -> Option<String> {
    let mut bounds: BTreeMap<&str, (DateTime<Utc>, DateTime<Utc>)> = BTreeMap::new();
    for e in log.events() {
        let b = bounds.entry(&e.case_id).or_insert((e.timestamp, e.timestamp));
        b.0 = b.0.min(e.timestamp);
        b.1 = b.1.max(e.timestamp);
    }
    for (i, date) in panel.calendar.dates().iter().enumerate() {
        let hours: Vec<f64> = bounds
            .values()
            .filter(|(s, _)| s.date_naive() == *date)
            .map(|(s, e)| (*e - *s).num_seconds() as f64 / 3600.0)
            .collect();
        let tt = hours.iter().sum::<f64>() / hours.len() as f64;
        if (tt - panel.tt[i]).abs() > 1e-9 {
            return Some(format!("TT on {date}: {} vs {tt}", panel.tt[i]));
        }
        let on_day: Vec<&Transition> = transitions.iter().filter(|t| t.date == *date).collect();
        let total: u64 = (0..4).map(|b| panel.counts[b][i]).sum();
        if total != on_day.len() as u64 {
            return Some(format!("{date}: counts sum to {total}, {} transitions", on_day.len()));
        }
        for b in BehaviorType::ALL {
            let secs: f64 = on_day
                .iter()
                .filter(|t| t.behavior == b)
                .map(|t| (t.to_event.timestamp - t.from_event.timestamp).num_seconds() as f64)
                .sum();
            if (secs - panel.time_seconds[b.index()][i]).abs() > 1e-9 {
                return Some(format!(
                    "{date} {}: time {} vs {secs}",
                    b.as_str(),
                    panel.time_seconds[b.index()][i]
                ));
            }
        }
    }
    None
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut logs = vec![fixture_log()];
    logs.extend((0..25).map(|_| random_log(&mut rng)));
    for (i, log) in logs.iter().enumerate() {
        let transitions = classify_transitions(log);
        for mode in [CalendarMode::CaseStart, CalendarMode::Dense] {
            let (panel, diag) = match assemble_panel(log, &transitions, mode) {
                Ok(p) => p,
                Err(e) => return Fail(format!("log {i}: {e}")),
            };
            if mode == CalendarMode::CaseStart {
                if let Some(msg) = aggregation_mismatch(log, &transitions, &panel) {
                    return Fail(format!("log {i}: {msg}"));
                }
            }
            let counted: u64 = panel.counts.iter().flatten().sum();
            if counted as usize + diag.dropped_transitions != transitions.len() {
                return Fail(format!(
                    "log {i}: {counted} counted + {} dropped",
                    diag.dropped_transitions
                ));
            }
        }
    }
    Pass(format!(
        "{} logs: per-day counts, TT and durations match direct computation",
        logs.len()
    ))
}

// ---------------------------------------------------------------------------
// Reconstruction

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(5..200);
        let tt: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..500.0)).collect();
        let diffs: Vec<f64> = first_difference(&tt)[1..].iter().map(|d| d.unwrap()).collect();
        let rec = reconstruct(&tt[..n - 1], &diffs).unwrap();
        for (got, want) in rec.values.iter().zip(&tt[1..]) {
            worst = worst.max((got - want).abs());
        }
    }
    check(
        worst <= 1e-9,
        format!("100 series reconstructed, max error {worst:.1e}"),
        format!("max reconstruction error {worst:e}"),
    )
}

// ---------------------------------------------------------------------------
// Leakage

fn fixture_panel() -> SeriesPanel {
    let log = fixture_log();
    assemble_panel(&log, &classify_transitions(&log), CalendarMode::CaseStart)
        .unwrap()
        .0
}

/// Feature columns whose value at some origin changes when the panel is cut
/// right after that origin.
fn look_ahead_columns(panel: &SeriesPanel, opts: &FeatureOptions) -> Vec<String> {
    let names = feature_names(FeatureSet::ActorEnriched);
    let full = feature_columns(panel, FeatureSet::ActorEnriched, opts);
    let mut leaking = vec![false; names.len()];
    for t in 0..panel.len() {
        let cut = feature_columns(&panel.truncate(t + 1), FeatureSet::ActorEnriched, opts);
        for (j, col) in cut.iter().enumerate() {
            let same = match (col[t], full[j][t]) {
                (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                (None, None) => true,
                _ => false,
            };
            leaking[j] |= !same;
        }
    }
    names
        .into_iter()
        .zip(leaking)
        .filter(|(_, l)| *l)
        .map(|(n, _)| n)
        .collect()
}

fn split_leaks(m: &FeatureMatrix, folds: usize) -> Option<String> {
    let split = chrono_split(m.n_rows(), 0.8).ok()?;
    let d = &m.origin_dates;
    if d[split.train.end - 1] >= d[split.holdout.start] {
        return Some("holdout".into());
    }
    for (k, f) in ts_cv_folds(split.train.len(), folds).ok()?.folds.iter().enumerate() {
        if d[f.train.end - 1] >= d[f.validation.start] || f.validation.end > split.train.end {
            return Some(format!("fold {k}"));
        }
    }
    None
}

fn criterion_4() -> Outcome {
    let panels = [fixture_panel(), actor_signal_panel(4, 120)];
    let causal = FeatureOptions {
        peak_mode: PeakMode::Causal,
        ..FeatureOptions::default()
    };
    let paper = FeatureOptions {
        peak_mode: PeakMode::Paper,
        ..FeatureOptions::default()
    };
    for (i, panel) in panels.iter().enumerate() {
        for set in [FeatureSet::Baseline, FeatureSet::ActorEnriched] {
            let m = build_feature_matrix(panel, set, &causal).unwrap();
            if let Some(where_) = split_leaks(&m, 5) {
                return Fail(format!("panel {i} {}: {where_} trains on a later origin", set.as_str()));
            }
        }
        let leaking = look_ahead_columns(panel, &causal);
        if !leaking.is_empty() {
            return Fail(format!(
                "panel {i}: causal features change under truncation: {leaking:?}"
            ));
        }
        // The full-series peak indicator sees the future and must be the only
        // column that does.
        let leaking = look_ahead_columns(panel, &paper);
        if leaking != ["TT_peak"] {
            return Fail(format!(
                "panel {i}: expected only TT_peak to look ahead in paper mode, got {leaking:?}"
            ));
        }
    }
    Pass("splits and folds are ordered; every causal feature survives truncation; paper-mode TT_peak excluded (looks ahead)".into())
}

// ---------------------------------------------------------------------------
// Learners

/// Exhaustive best single split; ties go to the lowest feature, then threshold.
fn stump_oracle(x: &[Vec<f64>], y: &[f64]) -> Option<(usize, f64, f64, f64)> {
    let n = y.len();
    let mean = |idx: &[usize]| idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
    let sse = |idx: &[usize]| {
        let m = mean(idx);
        idx.iter().map(|&i| (y[i] - m) * (y[i] - m)).sum::<f64>()
    };
    let all: Vec<usize> = (0..n).collect();
    let parent = sse(&all);
    let mut best: Option<(f64, usize, f64, f64, f64)> = None;
    for (f, col) in x.iter().enumerate() {
        let mut values = col.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| col[i] <= thr);
            let total = sse(&l) + sse(&r);
            if total < parent - 1e-12 * parent && best.as_ref().is_none_or(|b| total < b.0 - 1e-12 * parent) {
                best = Some((total, f, thr, mean(&l), mean(&r)));
            }
        }
    }
    best.map(|(_, f, t, l, r)| (f, t, l, r))
}

fn stump_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.gen_range(6..30);
    let p = rng.gen_range(1..5);
    let x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let rows: Vec<f64> = (0..n).flat_map(|i| x.iter().map(move |c| c[i])).collect();
    let (f, thr, left, right) = stump_oracle(&x, &y).ok_or("oracle found no split")?;

    let data = TrainingData::new(&rows, p);
    let sample: Vec<usize> = (0..n).collect();
    let features: Vec<usize> = (0..p).collect();
    let params = TreeParams {
        max_depth: 1,
        min_samples_leaf: 1,
    };
    let tree = fit_tree(&data, &y, &sample, &features, params);
    let root = &tree.nodes[0];
    if root.feature != Some(f) || root.threshold != thr {
        return Err(format!(
            "split ({:?}, {}) vs oracle ({f}, {thr})",
            root.feature, root.threshold
        ));
    }
    let leaves = (
        tree.nodes[root.left.unwrap()].value,
        tree.nodes[root.right.unwrap()].value,
    );
    if (leaves.0 - left).abs() > 1e-9 || (leaves.1 - right).abs() > 1e-9 {
        return Err(format!("leaves {leaves:?} vs oracle ({left}, {right})"));
    }

    // One unshrunk boosting round reproduces the stump.
    let gbt = GbtParams {
        n_estimators: 1,
        learning_rate: 1.0,
        max_depth: 1,
        feature_fraction: 1.0,
        bagging_fraction: 1.0,
        min_samples_leaf: 1,
        seed: 0,
    };
    let ens = fit_ensemble(&rows, p, &y, &gbt, None).map_err(|e| e.to_string())?;
    for i in 0..n {
        let want = if x[f][i] <= thr { left } else { right };
        let got = ens.predict(&rows[i * p..(i + 1) * p]);
        if (got - want).abs() > 1e-9 {
            return Err(format!("ensemble row {i}: {got} vs {want}"));
        }
    }
    Ok(())
}

fn sse_trace(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, p) = (80, 6);
    let rows: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 3.0 * rows[i * p] - rows[i * p + 1] * rows[i * p + 2] + rng.gen_range(-0.3..0.3))
        .collect();
    let params = GbtParams {
        n_estimators: 200,
        learning_rate: 0.1,
        max_depth: 3,
        feature_fraction: 1.0,
        bagging_fraction: 1.0,
        min_samples_leaf: 2,
        seed: 9,
    };
    let mut trace = Vec::new();
    let mut record = |_: usize, sse: f64| trace.push(sse);
    fit_ensemble(&rows, p, &y, &params, Some(&mut record)).unwrap();
    trace
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for i in 0..50 {
        if let Err(msg) = stump_case(&mut rng) {
            return Fail(format!("stump dataset {i}: {msg}"));
        }
    }
    let trace = sse_trace(&mut rng);
    // Allow only floating-point noise relative to the running SSE.
    if let Some(m) = trace.windows(2).position(|w| w[1] > w[0] * (1.0 + 1e-12)) {
        return Fail(format!("SSE rose at round {}: {} -> {}", m + 1, trace[m], trace[m + 1]));
    }
    if trace.len() != 200 {
        return Fail(format!("{} rounds observed", trace.len()));
    }

    let mut d = vec![6.0];
    for _ in 0..40 {
        d.push(0.5 * d.last().unwrap());
    }
    let mut tt = vec![50.0];
    for x in &d {
        tt.push(tt.last().unwrap() + x);
    }
    let coef = fit_ar(&tt, 5).unwrap().ar.unwrap();
    let phi = coef.coefficients.first().copied().unwrap_or(f64::NAN);
    check(
        coef.order == 1 && (phi - 0.5).abs() <= 1e-6,
        format!(
            "50 stumps match the exhaustive oracle; SSE non-increasing over 200 rounds ({:.3} -> {:.3}); AR(1) phi = {phi:.9}",
            trace[0], trace[199]
        ),
        format!("AR recovered order {} phi {phi}", coef.order),
    )
}

// ---------------------------------------------------------------------------
// Metrics

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    for k in 0..1000 {
        let n = rng.gen_range(2..60);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let nf = n as f64;
        let mut sq = 0.0;
        let mut ab = 0.0;
        for i in 0..n {
            sq += (a[i] - p[i]).powi(2);
            ab += (a[i] - p[i]).abs();
        }
        let mean = a.iter().sum::<f64>() / nf;
        let tot: f64 = a.iter().map(|v| (v - mean).powi(2)).sum();
        let m = compute_metrics(&a, &p).unwrap();
        let r2 = m.r2.unwrap_or(f64::NAN);
        if !close(m.rmse, (sq / nf).sqrt()) || !close(m.mae, ab / nf) || !close(r2, 1.0 - sq / tot) {
            return Fail(format!("pair {k}: {m:?}"));
        }
    }
    let a: Vec<f64> = (0..30).map(|i| f64::from(i) * 1.7 - 3.0).collect();
    let m = compute_metrics(&a, &a).unwrap();
    check(
        m.rmse == 0.0 && m.mae == 0.0 && m.r2 == Some(1.0),
        "1000 random pairs agree with direct summation; perfect prediction gives (0, 0, 1)",
        format!("perfect prediction gave {m:?}"),
    )
}

// ---------------------------------------------------------------------------
// Synthetic actor-signal recovery

const SIGNAL_FAMILY: [&str; 3] = ["Count_HB_lag3", "Count_HB_lag4", "Count_HB_lag5"];

fn signal_params(seed: u64) -> GbtParams {
    GbtParams {
        n_estimators: 300,
        learning_rate: 0.05,
        max_depth: 3,
        feature_fraction: 0.8,
        bagging_fraction: 0.8,
        min_samples_leaf: 5,
        seed,
    }
}

/// Holdout RMSE of reconstructed TT for both sets, and the top five actor features.
fn signal_run(seed: u64) -> (f64, f64, Vec<String>) {
    let panel = actor_signal_panel(seed, 500);
    let opts = FeatureOptions::default();
    let mut scores = Vec::new();
    let mut top = Vec::new();
    for set in [FeatureSet::Baseline, FeatureSet::ActorEnriched] {
        let m = build_feature_matrix(&panel, set, &opts).unwrap();
        let s = chrono_split(m.n_rows(), 0.8).unwrap();
        let (train, holdout) = (m.slice_rows(s.train), m.slice_rows(s.holdout));
        let model = fit_gbt(&train, &signal_params(seed)).unwrap();
        let tt = reconstruct(&holdout.base, &model.predict(&holdout).unwrap()).unwrap();
        scores.push(rmse(&holdout.actual_next, &tt.values).unwrap());
        if set == FeatureSet::ActorEnriched {
            top = permutation_importance(&model, &holdout, 5, seed)
                .unwrap()
                .into_iter()
                .take(5)
                .map(|f| f.feature)
                .collect();
        }
    }
    (scores[0], scores[1], top)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let runs: Vec<_> = (1..=10u64).into_par_iter().map(signal_run).collect();
    let base = median(runs.iter().map(|r| r.0).collect());
    let actor = median(runs.iter().map(|r| r.1).collect());
    let hits = runs
        .iter()
        .filter(|r| r.2.iter().any(|f| SIGNAL_FAMILY.contains(&f.as_str())))
        .count();
    let gain = 1.0 - actor / base;
    within(
        started.elapsed(),
        Duration::from_secs(120),
        check(
            gain >= 0.10 && hits >= 8,
            format!("median RMSE baseline {base:.3} vs actor {actor:.3} ({:.1}% lower); Count_HB lag 3-5 in top 5 for {hits}/10 seeds", 100.0 * gain),
            format!("median RMSE baseline {base:.3} vs actor {actor:.3} ({:.1}% lower, need 10%); Count_HB lag 3-5 in top 5 for {hits}/10 seeds (need 8)", 100.0 * gain),
        ),
    )
}

// ---------------------------------------------------------------------------
// Public log

fn bpic_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("BPIC2012_PATH") {
        return Some(PathBuf::from(p));
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    ["data/BPI_Challenge_2012.xes", "data/BPI_Challenge_2012.xes.gz"]
        .iter()
        .map(|p| root.join(p))
        .find(|p| p.is_file())
}

fn criterion_8() -> Outcome {
    let Some(path) = bpic_path() else {
        return Blocked(
            "BLOCKED: BPI Challenge 2012 log not found (set BPIC2012_PATH or place data/BPI_Challenge_2012.xes[.gz])"
                .into(),
        );
    };
    let started = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let mut config = RunConfig::default();
    config.dataset.path = Some(path);
    config.dataset.format = Some(LogFormat::Xes);
    let pipeline = Pipeline::new(config, out.path().to_path_buf(), FeatureSelection::Both);
    if let Err(e) = pipeline.run() {
        return Fail(format!("pipeline failed: {e}"));
    }
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(pipeline.path(METRICS_JSON)).unwrap()).unwrap();
    let rows = metrics["rows"].as_array().unwrap();
    let rmse_of = |model: &str, set: &str| {
        rows.iter()
            .find(|r| r["model"] == model)
            .and_then(|r| r[set]["rmse"].as_f64())
            .unwrap_or(f64::NAN)
    };
    let (base, actor) = (rmse_of("gbt", "baseline"), rmse_of("gbt", "actor"));
    let bench = rmse_of("ar_diff", "baseline").min(rmse_of("naive", "baseline"));
    within(
        started.elapsed(),
        Duration::from_secs(600),
        check(
            actor < base && base < bench,
            format!("actor {actor:.3} < baseline {base:.3} < best benchmark {bench:.3} hours"),
            format!("actor {actor:.3}, baseline {base:.3}, best benchmark {bench:.3} hours"),
        ),
    )
}

// ---------------------------------------------------------------------------
// Determinism

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_200.toml");
    let mut outs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_actor-tt"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .output()
            .unwrap();
        if !status.status.success() {
            return Fail(format!(
                "run with {threads} threads failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        outs.push(out);
    }
    for name in ["metrics.json", "predictions.csv", "importance.csv"] {
        if fs::read(outs[0].join(name)).unwrap() != fs::read(outs[1].join(name)).unwrap() {
            return Fail(format!("{name} differs between 1 and 4 threads"));
        }
    }
    Pass("metrics.json, predictions.csv and importance.csv byte-identical at 1 and 4 threads".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("behavior classification oracle", criterion_1),
        ("aggregation identities", criterion_2),
        ("reconstruction exactness", criterion_3),
        ("leakage suite", criterion_4),
        ("learner oracles", criterion_5),
        ("metric oracles", criterion_6),
        ("synthetic actor-signal recovery", criterion_7),
        ("BPIC2012 directional replication", criterion_8),
        ("determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("{} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        match std::panic::catch_unwind(run) {
            Ok(Pass(msg)) => println!("PASS {label}: {msg}"),
            Ok(Blocked(msg)) => println!("FAIL {label}: {msg}"),
            Ok(Fail(msg)) => {
                failed += 1;
                println!("FAIL {label}: {msg}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {label}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
