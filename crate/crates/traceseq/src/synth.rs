//! Seeded synthetic trace corpora for tests and desk-scale reproductions.
//!
//! Each user draws a platform subset from a multiplicity distribution, a
//! length from a log-normal, and then walks a platform-labeled Markov chain
//! with self-persistence `p_stay`, emitting weighted activities with
//! exponential inter-event gaps. Per-user sub-seeds make generation
//! deterministic and independent of evaluation order, so the parallel and
//! sequential paths produce identical corpora.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, WeightedIndex};
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Event, Platform, UserSequence};
use crate::stats::sub_seed;

/// One activity type of a platform, with its draw weight and optional
/// content pool organized as topic clusters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActivitySpec {
    pub name: String,
    pub weight: f64,
    /// Topic clusters of content strings; empty means no content attached.
    pub content_topics: Vec<Vec<String>>,
}

impl ActivitySpec {
    pub fn plain(name: &str, weight: f64) -> Self {
        ActivitySpec {
            name: name.to_string(),
            weight,
            content_topics: Vec::new(),
        }
    }

    pub fn with_content(name: &str, weight: f64, topics: Vec<Vec<String>>) -> Self {
        ActivitySpec {
            name: name.to_string(),
            weight,
            content_topics: topics,
        }
    }
}

/// Per-platform generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlatformSpec {
    pub platform: Platform,
    pub activities: Vec<ActivitySpec>,
    /// Mean inter-event gap in seconds (exponential).
    pub mean_gap_secs: f64,
}

/// Full generator configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    /// Users donating from exactly 1, 2, 3 and 4 platforms; must sum to
    /// `n_users`.
    pub multiplicity: [usize; 4],
    /// Log-normal length parameters (ln-space mean and std dev).
    pub length_mu: f64,
    pub length_sigma: f64,
    /// Observation period, epoch seconds; start times are drawn inside it.
    pub start_ts: i64,
    pub end_ts: i64,
    /// Probability the next activity stays on the current platform.
    pub p_stay: f64,
    /// Probability of a long break being inserted after an event.
    pub session_break_prob: f64,
    /// Mean length of a long break in seconds.
    pub session_break_secs: f64,
    pub platforms: Vec<PlatformSpec>,
}

fn content_topics(platform: &str, kind: &str, topics: usize, items: usize) -> Vec<Vec<String>> {
    let themes = [
        "local events", "music", "news", "sports", "travel", "cooking", "gaming", "fashion",
    ];
    (0..topics)
        .map(|t| {
            let theme = themes[t % themes.len()];
            (0..items)
                .map(|i| format!("{theme} {kind} {} {}", platform.to_lowercase(), i + 1))
                .collect()
        })
        .collect()
}

impl SynthConfig {
    /// Default platform specs: 13 platform-activity symbols across the four
    /// studied platforms, with content pools on searches and watches.
    pub fn default_platforms() -> Vec<PlatformSpec> {
        vec![
            PlatformSpec {
                platform: Platform::Facebook,
                activities: vec![
                    ActivitySpec::plain("likes", 4.0),
                    ActivitySpec::with_content(
                        "searches",
                        3.0,
                        content_topics("Facebook", "search", 6, 10),
                    ),
                    ActivitySpec::plain("comments", 1.5),
                ],
                mean_gap_secs: 180.0,
            },
            PlatformSpec {
                platform: Platform::Instagram,
                activities: vec![
                    ActivitySpec::plain("likes", 5.0),
                    ActivitySpec::plain("shares", 1.5),
                    ActivitySpec::plain("saves", 1.0),
                ],
                mean_gap_secs: 120.0,
            },
            PlatformSpec {
                platform: Platform::TikTok,
                activities: vec![
                    ActivitySpec::with_content(
                        "watch_history",
                        8.0,
                        content_topics("TikTok", "clip", 6, 10),
                    ),
                    ActivitySpec::plain("likes", 3.0),
                    ActivitySpec::plain("favorites", 1.0),
                    ActivitySpec::plain("login_history", 1.0),
                ],
                mean_gap_secs: 45.0,
            },
            PlatformSpec {
                platform: Platform::YouTube,
                activities: vec![
                    ActivitySpec::with_content(
                        "watch_history",
                        6.0,
                        content_topics("YouTube", "video", 6, 10),
                    ),
                    ActivitySpec::with_content(
                        "searches",
                        2.0,
                        content_topics("YouTube", "search", 6, 10),
                    ),
                    ActivitySpec::plain("likes", 1.0),
                ],
                mean_gap_secs: 300.0,
            },
        ]
    }

    /// Corpus shaped like the studied donation dataset: 309 users with
    /// multiplicities 208/67/26/8 over May 1 -- Aug 1 2024, right-skewed
    /// log-normal lengths (median 800, ln-space mean of 4,000).
    pub fn paper_shape(seed: u64) -> Self {
        SynthConfig {
            seed,
            n_users: 309,
            multiplicity: [208, 67, 26, 8],
            length_mu: 800f64.ln(),
            // exp(mu + sigma^2/2) = 4000 => sigma = sqrt(2 ln 5)
            length_sigma: (2.0 * 5f64.ln()).sqrt(),
            start_ts: 1_714_521_600, // 2024-05-01T00:00:00Z
            end_ts: 1_722_470_400,   // 2024-08-01T00:00:00Z
            p_stay: 0.9,
            session_break_prob: 0.03,
            session_break_secs: 6.0 * 3600.0,
            platforms: Self::default_platforms(),
        }
    }

    /// Small corpus for tests: `n_users` all-multi-platform users with short
    /// sequences.
    pub fn small(seed: u64, n_users: usize) -> Self {
        SynthConfig {
            seed,
            n_users,
            multiplicity: [0, 0, 0, n_users],
            length_mu: 120f64.ln(),
            length_sigma: 0.3,
            start_ts: 1_714_521_600,
            end_ts: 1_714_521_600 + 14 * 86_400,
            p_stay: 0.9,
            session_break_prob: 0.02,
            session_break_secs: 4.0 * 3600.0,
            platforms: Self::default_platforms(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::config("n_users must be positive"));
        }
        if self.multiplicity.iter().sum::<usize>() != self.n_users {
            return Err(Error::config(
                "multiplicity counts must sum to n_users",
            ));
        }
        if !(self.p_stay > 0.0 && self.p_stay < 1.0) {
            return Err(Error::config("p_stay must lie in (0, 1)"));
        }
        if self.length_sigma <= 0.0 {
            return Err(Error::config("length_sigma must be positive"));
        }
        if self.end_ts <= self.start_ts {
            return Err(Error::config("date range is empty"));
        }
        if self.platforms.is_empty() || self.platforms.iter().any(|p| p.activities.is_empty()) {
            return Err(Error::config("every platform needs at least one activity"));
        }
        if self
            .platforms
            .iter()
            .any(|p| !(p.mean_gap_secs > 0.0) || p.activities.iter().any(|a| !(a.weight > 0.0)))
        {
            return Err(Error::config("gaps and activity weights must be positive"));
        }
        Ok(())
    }

    /// Number of platforms drawn for the user at `index`, assigned
    /// deterministically from the multiplicity counts.
    fn platform_count(&self, index: usize) -> usize {
        let mut cum = 0;
        for (i, &count) in self.multiplicity.iter().enumerate() {
            cum += count;
            if index < cum {
                return i + 1;
            }
        }
        1
    }
}

/// Generates a corpus; deterministic for a fixed seed, bitwise identical
/// between the parallel and sequential paths.
pub fn generate(config: &SynthConfig) -> Result<Vec<UserSequence>> {
    config.validate()?;
    let indices: Vec<usize> = (0..config.n_users).collect();
    #[cfg(feature = "parallel")]
    let sequences = indices
        .par_iter()
        .map(|&i| generate_user(config, i))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let sequences = indices.iter().map(|&i| generate_user(config, i)).collect();
    Ok(sequences)
}

/// Sequential variant of [`generate`], kept for benchmarking the rayon path
/// against a plain loop.
pub fn generate_seq(config: &SynthConfig) -> Result<Vec<UserSequence>> {
    config.validate()?;
    Ok((0..config.n_users)
        .map(|i| generate_user(config, i))
        .collect())
}

fn generate_user(config: &SynthConfig, index: usize) -> UserSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, index as u64));
    let user_id = format!("u{:04}", index + 1);

    // Platform subset for this user.
    let n_platforms = config.platform_count(index).min(config.platforms.len());
    let mut platform_order: Vec<usize> = (0..config.platforms.len()).collect();
    platform_order.shuffle(&mut rng);
    let mine: Vec<usize> = platform_order[..n_platforms].to_vec();

    // Per-platform preferred content topic for this user.
    let topic_pref: Vec<usize> = config
        .platforms
        .iter()
        .map(|_| rng.gen_range(0..usize::MAX))
        .collect();

    // Sequence length, right-skewed; at least one event per drawn platform
    // so the user expresses their multiplicity.
    let lognormal = LogNormal::new(config.length_mu, config.length_sigma)
        .expect("validated sigma");
    let length = (lognormal.sample(&mut rng).round() as i64).max(1) as usize;
    let length = length.max(mine.len());

    let path = platform_path(config, &mine, length, &mut rng);

    let range = (config.end_ts - config.start_ts) as u64;
    let mut t = config.start_ts + (rng.gen_range(0..range) as i64);

    let weight_tables: Vec<WeightedIndex<f64>> = config
        .platforms
        .iter()
        .map(|p| {
            WeightedIndex::new(p.activities.iter().map(|a| a.weight)).expect("validated weights")
        })
        .collect();

    let mut events = Vec::with_capacity(length);
    for &cur in &path {
        let spec = &config.platforms[cur];
        let act_idx = weight_tables[cur].sample(&mut rng);
        let act = &spec.activities[act_idx];
        let mut event = Event::new(&user_id, t, spec.platform.clone(), act.name.clone());
        if !act.content_topics.is_empty() {
            // Mostly draw from the user's preferred topic so content
            // co-occurs in clusters.
            let topic = if rng.gen_bool(0.8) {
                topic_pref[cur] % act.content_topics.len()
            } else {
                rng.gen_range(0..act.content_topics.len())
            };
            let pool = &act.content_topics[topic];
            event = event.with_content(pool[rng.gen_range(0..pool.len())].clone());
        }
        events.push(event);

        // Inter-event gap; strictly positive keeps timestamps increasing.
        let exp = Exp::new(1.0 / spec.mean_gap_secs).expect("validated gap");
        let mut gap = exp.sample(&mut rng).round().max(1.0);
        if rng.gen_bool(config.session_break_prob) {
            let brk = Exp::new(1.0 / config.session_break_secs).expect("validated break");
            gap += brk.sample(&mut rng).round();
        }
        t += gap as i64;
    }

    UserSequence::new(user_id, events).expect("generated events share the user id")
}

/// Self-persistent Markov walk over the user's platforms, conditioned on
/// visiting every drawn platform: resample on a miss, with a deterministic
/// fill after 50 attempts (only reachable for very short sequences).
fn platform_path(
    config: &SynthConfig,
    mine: &[usize],
    length: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut path = Vec::with_capacity(length);
    for attempt in 0..50 {
        path.clear();
        let mut cur = mine[rng.gen_range(0..mine.len())];
        for _ in 0..length {
            path.push(cur);
            if mine.len() > 1 && !rng.gen_bool(config.p_stay) {
                let others: Vec<usize> = mine.iter().copied().filter(|&p| p != cur).collect();
                cur = others[rng.gen_range(0..others.len())];
            }
        }
        let covered = mine.iter().all(|p| path.contains(p));
        if covered || attempt == 49 {
            break;
        }
    }
    let missing: Vec<usize> = mine
        .iter()
        .copied()
        .filter(|p| !path.contains(p))
        .collect();
    for (slot, platform) in missing.into_iter().enumerate() {
        path[slot] = platform;
    }
    path
}
