//! Event history analysis: platform-switch durations, Kaplan-Meier curves
//! and Cox proportional hazards.

mod cox;

pub use cox::{cox_fit, CoxFit};

use serde::Serialize;

use crate::error::Result;
use crate::model::{Platform, Session};

/// One duration until a platform switch, possibly right-censored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationRecord {
    pub user_id: String,
    pub platform: Platform,
    pub duration_minutes: f64,
    /// True when the switch was observed; false means right-censored at the
    /// end of the user's data.
    pub observed: bool,
}

/// Whether users who never switch platforms contribute censored records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinglePlatformPolicy {
    Include,
    Exclude,
}

/// Duration records plus bookkeeping on degenerate rows.
#[derive(Debug, Clone)]
pub struct DurationBuild {
    pub records: Vec<DurationRecord>,
    /// Zero-length durations bumped to one second.
    pub zero_adjusted: usize,
}

/// Builds switch durations from per-user platform sessions.
///
/// Each session yields one record: the time from its start to the start of
/// the next session on a *different* platform. When no later switch exists
/// the record is censored at the span to the user's last observed moment
/// (for the final session, its own span).
pub fn build_durations(
    sessions_per_user: &[Vec<Session>],
    policy: SinglePlatformPolicy,
) -> DurationBuild {
    let mut records = Vec::new();
    let mut zero_adjusted = 0usize;
    for sessions in sessions_per_user {
        if sessions.is_empty() {
            continue;
        }
        let multi_platform = sessions
            .iter()
            .any(|s| s.platform != sessions[0].platform);
        if !multi_platform && policy == SinglePlatformPolicy::Exclude {
            continue;
        }
        let last_end = sessions.last().expect("non-empty").end;
        for (i, session) in sessions.iter().enumerate() {
            let switch = sessions[i + 1..]
                .iter()
                .find(|next| next.platform != session.platform);
            let (seconds, observed) = match switch {
                Some(next) => (next.start - session.start, true),
                None => (last_end - session.start, false),
            };
            let mut minutes = seconds as f64 / 60.0;
            if minutes <= 0.0 {
                // Simultaneous switch; one second keeps the risk set sane.
                minutes = 1.0 / 60.0;
                zero_adjusted += 1;
            }
            records.push(DurationRecord {
                user_id: session.user_id.clone(),
                platform: session.platform.clone(),
                duration_minutes: minutes,
                observed,
            });
        }
    }
    DurationBuild {
        records,
        zero_adjusted,
    }
}

/// Kaplan-Meier product-limit estimate for one group.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve {
    pub platform: String,
    /// Distinct observed event times, ascending.
    pub times: Vec<f64>,
    /// `S(t_i)`, non-increasing from 1.
    pub survival: Vec<f64>,
    /// Greenwood variance of `S(t_i)`.
    pub variance: Vec<f64>,
    /// Log-log 95% confidence bounds.
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub n_records: usize,
    pub n_events: usize,
    /// Set when the group had no observed events; the curve is constant 1.
    pub no_events: bool,
}

impl SurvivalCurve {
    /// CSV of `(t, survival, ci_lower, ci_upper)` rows, starting at t=0.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t_minutes", "survival", "ci_lower", "ci_upper"])
            .map_err(crate::ingest::io_of_csv)?;
        wtr.write_record(["0", "1", "1", "1"])
            .map_err(crate::ingest::io_of_csv)?;
        for i in 0..self.times.len() {
            wtr.write_record([
                self.times[i].to_string(),
                self.survival[i].to_string(),
                self.ci_lower[i].to_string(),
                self.ci_upper[i].to_string(),
            ])
            .map_err(crate::ingest::io_of_csv)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Kaplan-Meier curves grouped by platform, sorted by platform name.
///
/// Groups with zero observed events return a constant-1 curve flagged
/// `no_events`. Curves whose last record is censored terminate above zero.
pub fn kaplan_meier(records: &[DurationRecord]) -> Vec<SurvivalCurve> {
    let mut platforms: Vec<&Platform> = Vec::new();
    for r in records {
        if !platforms.contains(&&r.platform) {
            platforms.push(&r.platform);
        }
    }
    platforms.sort();
    platforms
        .iter()
        .map(|p| {
            let group: Vec<&DurationRecord> =
                records.iter().filter(|r| &&r.platform == p).collect();
            km_single(p.name(), &group)
        })
        .collect()
}

fn km_single(platform: &str, group: &[&DurationRecord]) -> SurvivalCurve {
    let mut order: Vec<usize> = (0..group.len()).collect();
    order.sort_by(|&a, &b| {
        group[a]
            .duration_minutes
            .partial_cmp(&group[b].duration_minutes)
            .unwrap()
    });

    let mut times = Vec::new();
    let mut survival = Vec::new();
    let mut variance = Vec::new();
    let mut ci_lower = Vec::new();
    let mut ci_upper = Vec::new();

    let mut at_risk = group.len();
    let mut s = 1.0f64;
    // Greenwood accumulator: sum d / (n (n - d)).
    let mut greenwood = 0.0f64;
    let mut n_events = 0usize;
    const Z95: f64 = 1.959_963_984_540_054;

    let mut i = 0;
    while i < order.len() {
        let t = group[order[i]].duration_minutes;
        let mut events = 0usize;
        let mut leaving = 0usize;
        while i < order.len() && group[order[i]].duration_minutes == t {
            if group[order[i]].observed {
                events += 1;
            }
            leaving += 1;
            i += 1;
        }
        if events > 0 {
            let n = at_risk as f64;
            let d = events as f64;
            s *= 1.0 - d / n;
            if n > d {
                greenwood += d / (n * (n - d));
            }
            n_events += events;
            times.push(t);
            survival.push(s);
            variance.push(s * s * greenwood);
            // Log-log CI; degenerate at S = 0 or 1.
            if s > 0.0 && s < 1.0 {
                let se_theta = greenwood.sqrt() / s.ln().abs();
                ci_lower.push(s.powf((Z95 * se_theta).exp()));
                ci_upper.push(s.powf((-Z95 * se_theta).exp()));
            } else {
                ci_lower.push(s);
                ci_upper.push(s);
            }
        }
        at_risk -= leaving;
    }

    SurvivalCurve {
        platform: platform.to_string(),
        times,
        survival,
        variance,
        ci_lower,
        ci_upper,
        n_records: group.len(),
        n_events,
        no_events: n_events == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn session(user: &str, platform: Platform, start: i64, end: i64) -> Session {
        Session {
            user_id: user.to_string(),
            symbol: platform.name().to_string(),
            platform,
            start,
            end,
            count: 1,
        }
    }

    fn record(platform: Platform, minutes: f64, observed: bool) -> DurationRecord {
        DurationRecord {
            user_id: "u".to_string(),
            platform,
            duration_minutes: minutes,
            observed,
        }
    }

    #[test]
    fn switch_duration_measured_to_next_platform_start() {
        let sessions = vec![vec![
            session("u1", Platform::Facebook, 0, 300),
            session("u1", Platform::Instagram, 1800, 2100),
        ]];
        let build = build_durations(&sessions, SinglePlatformPolicy::Include);
        assert_eq!(build.records.len(), 2);
        let fb = &build.records[0];
        assert_eq!(fb.platform, Platform::Facebook);
        assert_eq!(fb.duration_minutes, 30.0);
        assert!(fb.observed);
        // Final session: censored at its own span.
        let ig = &build.records[1];
        assert_eq!(ig.duration_minutes, 5.0);
        assert!(!ig.observed);
    }

    #[test]
    fn three_user_fixture_matches_hand_enumeration() {
        let sessions = vec![
            // u1: FB(0) -> FB(1200) -> IG(3600): both FB sessions switch at 3600.
            vec![
                session("u1", Platform::Facebook, 0, 600),
                session("u1", Platform::Facebook, 1200, 1500),
                session("u1", Platform::Instagram, 3600, 3900),
            ],
            // u2: single-platform, two sessions, all censored at last end.
            vec![
                session("u2", Platform::TikTok, 0, 60),
                session("u2", Platform::TikTok, 7200, 7800),
            ],
            // u3: one session only.
            vec![session("u3", Platform::YouTube, 0, 240)],
        ];
        let build = build_durations(&sessions, SinglePlatformPolicy::Include);
        let got: Vec<(f64, bool)> = build
            .records
            .iter()
            .map(|r| (r.duration_minutes, r.observed))
            .collect();
        assert_eq!(
            got,
            vec![
                (60.0, true),
                (40.0, true),
                (5.0, false),
                (130.0, false),
                (10.0, false),
                (4.0, false),
            ]
        );
        assert_eq!(build.zero_adjusted, 0);

        let excluded = build_durations(&sessions, SinglePlatformPolicy::Exclude);
        assert_eq!(excluded.records.len(), 3);
    }

    #[test]
    fn zero_durations_bumped_and_counted() {
        let sessions = vec![vec![
            session("u1", Platform::Facebook, 100, 100),
            session("u1", Platform::Instagram, 100, 200),
        ]];
        let build = build_durations(&sessions, SinglePlatformPolicy::Include);
        assert_eq!(build.zero_adjusted, 1);
        assert!(build.records[0].duration_minutes > 0.0);
    }

    #[test]
    fn km_all_observed_matches_product_limit() {
        let records: Vec<DurationRecord> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&t| record(Platform::Facebook, t, true))
            .collect();
        let curve = &kaplan_meier(&records)[0];
        assert_eq!(curve.times, vec![1.0, 2.0, 3.0]);
        let expected = [2.0 / 3.0, 1.0 / 3.0, 0.0];
        for (s, e) in curve.survival.iter().zip(&expected) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn km_with_censoring_removes_from_risk_set() {
        // {1 observed, 2 censored, 3 observed}: S(1) = 2/3, S(3) = 2/3 * 0 = 0.
        let records = vec![
            record(Platform::Facebook, 1.0, true),
            record(Platform::Facebook, 2.0, false),
            record(Platform::Facebook, 3.0, true),
        ];
        let curve = &kaplan_meier(&records)[0];
        assert_eq!(curve.times, vec![1.0, 3.0]);
        assert!((curve.survival[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(curve.survival[1], 0.0);
    }

    #[test]
    fn km_all_censored_is_constant_one() {
        let records: Vec<DurationRecord> = (1..5)
            .map(|t| record(Platform::TikTok, t as f64, false))
            .collect();
        let curve = &kaplan_meier(&records)[0];
        assert!(curve.no_events);
        assert!(curve.times.is_empty());
    }

    #[test]
    fn km_curve_with_trailing_censoring_stays_above_zero() {
        let records = vec![
            record(Platform::YouTube, 1.0, true),
            record(Platform::YouTube, 2.0, true),
            record(Platform::YouTube, 5.0, false),
        ];
        let curve = &kaplan_meier(&records)[0];
        let last = *curve.survival.last().unwrap();
        assert!(last > 0.0);
    }

    #[test]
    fn km_without_censoring_equals_empirical_survival() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let durations: Vec<f64> = (0..40).map(|_| rng.gen_range(1..50) as f64).collect();
        let records: Vec<DurationRecord> = durations
            .iter()
            .map(|&t| record(Platform::Instagram, t, true))
            .collect();
        let curve = &kaplan_meier(&records)[0];
        for (t, s) in curve.times.iter().zip(&curve.survival) {
            let above = durations.iter().filter(|&&d| d > *t).count() as f64;
            let empirical = above / durations.len() as f64;
            assert!((s - empirical).abs() < 1e-12);
        }
    }

    #[test]
    fn km_properties_hold_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let records: Vec<DurationRecord> = (0..30)
                .map(|_| {
                    record(
                        Platform::Facebook,
                        rng.gen_range(1..20) as f64,
                        rng.gen_bool(0.7),
                    )
                })
                .collect();
            for curve in kaplan_meier(&records) {
                let mut prev = 1.0;
                for (i, &s) in curve.survival.iter().enumerate() {
                    assert!((0.0..=1.0).contains(&s));
                    assert!(s <= prev + 1e-12);
                    assert!(curve.ci_lower[i] <= s + 1e-12);
                    assert!(curve.ci_upper[i] >= s - 1e-12);
                    prev = s;
                }
            }
        }
    }
}
