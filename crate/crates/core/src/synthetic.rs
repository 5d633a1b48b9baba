//! Seeded generators for fixtures and benchmarks.

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::event_log::{Event, EventLog};
use crate::rng::unit_rng;
use crate::timeseries::{DailyCalendar, SeriesPanel};

/// A process log with one case starting per day.
///
/// Case `i` starts on day `i` at a random morning hour and has
/// `events_of(i)` events separated by 20 minutes to 30 hours, each executed
/// by one of `n_resources` resources. Cases overlap, so every behavior type
/// shows up.
pub fn process_log(seed: u64, n_cases: usize, n_resources: usize, events_of: impl Fn(usize) -> usize) -> EventLog {
    let origin = Utc.with_ymd_and_hms(2023, 1, 2, 0, 0, 0).unwrap();
    let mut rng = unit_rng(seed, &[0x0106]);
    let mut events = Vec::new();
    for case in 0..n_cases {
        let mut t = origin + Duration::days(case as i64) + Duration::minutes(rng.gen_range(6 * 60..12 * 60));
        let mut resource = rng.gen_range(0..n_resources);
        for k in 0..events_of(case) {
            if k > 0 {
                t += Duration::minutes(rng.gen_range(20..30 * 60));
                // Hand over to a random resource half of the time.
                if rng.gen_bool(0.5) {
                    resource = rng.gen_range(0..n_resources);
                }
            }
            events.push(
                Event::new(
                    &format!("case_{case:03}"),
                    &format!("step_{k}"),
                    t,
                    &format!("res_{resource}"),
                )
                .expect("non-empty fields"),
            );
        }
    }
    EventLog::new("synthetic", events)
}

/// The bundled 200-event fixture: 80 cases alternating 3 and 2 events.
pub fn fixture_log() -> EventLog {
    process_log(2024, 80, 4, |i| if i % 2 == 0 { 3 } else { 2 })
}

/// Daily panel where actor handovers drive throughput time:
/// `TT[t] = 0.6 TT[t-1] + 0.3 Count_HB[t-4] + e[t]` with `e ~ N(0, 1)` and
/// `Count_HB` i.i.d. uniform on `0..=40`. The other actor columns are
/// independent noise. A 50-day burn-in is discarded.
pub fn actor_signal_panel(seed: u64, n_days: usize) -> SeriesPanel {
    const BURN_IN: usize = 50;
    let total = n_days + BURN_IN;
    let mut rng = unit_rng(seed, &[0xAC_70]);
    let hb: Vec<f64> = (0..total).map(|_| f64::from(rng.gen_range(0..=40u32))).collect();
    let mut tt = vec![15.0; total];
    for t in 1..total {
        let lagged = if t >= 4 { hb[t - 4] } else { 20.0 };
        let e: f64 = StandardNormal.sample(&mut rng);
        tt[t] = 0.6 * tt[t - 1] + 0.3 * lagged + e;
    }
    let noise_counts =
        |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u64> { (0..n_days).map(|_| rng.gen_range(0..=40)).collect() };
    let c = noise_counts(&mut rng);
    let i = noise_counts(&mut rng);
    let hi = noise_counts(&mut rng);
    let times: [Vec<f64>; 4] = std::array::from_fn(|_| (0..n_days).map(|_| rng.gen_range(0.0..86_400.0)).collect());
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    SeriesPanel {
        calendar: DailyCalendar::new((0..n_days).map(|d| start + Duration::days(d as i64)).collect())
            .expect("consecutive days"),
        tt: tt[BURN_IN..].iter().map(|v| v.max(0.0)).collect(),
        n_cases: vec![1; n_days],
        counts: [c, i, hi, hb[BURN_IN..].iter().map(|v| *v as u64).collect()],
        time_seconds: times,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_has_200_events() {
        let log = fixture_log();
        assert_eq!(log.len(), 200);
        assert_eq!(log, fixture_log());
    }

    #[test]
    fn signal_panel_follows_recursion_in_expectation() {
        let p = actor_signal_panel(1, 500);
        assert_eq!(p.len(), 500);
        p.validate().unwrap();
        let mean = p.tt.iter().sum::<f64>() / 500.0;
        // Stationary mean 0.3 * 20 / 0.4 = 15.
        assert!((mean - 15.0).abs() < 1.5, "{mean}");
    }
}
