//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime. Oracles here are independent of the implementation paths
//! they check.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use traceseq::embed::{self, ProjectionMethod, TsneConfig};
use traceseq::graph;
use traceseq::hmm::{self, FitOptions};
use traceseq::ingest;
use traceseq::model::{encode_corpus, Lexicon, LexiconMode, Platform};
use traceseq::preprocess;
use traceseq::procmine;
use traceseq::seqa::{self, CostScheme};
use traceseq::survival::{self, DurationRecord};
use traceseq::synth::{self, SynthConfig};

fn lexicon_of(names: &[&str]) -> Lexicon {
    let mut lex = Lexicon::new(LexiconMode::PlatformActivity);
    for n in names {
        lex.intern(n);
    }
    lex
}

/// Exhaustive edit-script minimum: plain recursion, no memoization.
fn om_brute_force(a: &[u32], b: &[u32], scheme: &CostScheme) -> f64 {
    if a.is_empty() {
        return b.len() as f64 * scheme.indel;
    }
    if b.is_empty() {
        return a.len() as f64 * scheme.indel;
    }
    let sub = if a[0] == b[0] { 0.0 } else { scheme.substitution };
    (om_brute_force(&a[1..], &b[1..], scheme) + sub)
        .min(om_brute_force(&a[1..], b, scheme) + scheme.indel)
        .min(om_brute_force(a, &b[1..], scheme) + scheme.indel)
}

#[test]
fn criterion_1_sequence_analysis_oracles() {
    let started = Instant::now();

    // Optimal matching against the exhaustive edit-script search.
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let scheme = CostScheme::unnormalized();
    for _ in 0..100 {
        let la = rng.gen_range(1..=8);
        let lb = rng.gen_range(1..=8);
        let a: Vec<u32> = (0..la).map(|_| rng.gen_range(0..4)).collect();
        let b: Vec<u32> = (0..lb).map(|_| rng.gen_range(0..4)).collect();
        let dp = seqa::om_distance(&a, &b, &scheme).unwrap();
        let brute = om_brute_force(&a, &b, &scheme);
        assert_eq!(dp, brute, "om mismatch on a={a:?} b={b:?}");
    }

    // Motif counts against brute-force enumeration on a 50-session fixture.
    let lex = lexicon_of(&["A", "B", "C", "D", "E"]);
    let sessions: Vec<Vec<u32>> = (0..50)
        .map(|_| {
            let l = rng.gen_range(2..18);
            (0..l).map(|_| rng.gen_range(0..5)).collect()
        })
        .collect();
    let table = seqa::mine_motifs(&sessions, &lex, &[2, 3, 4], 1e-4).unwrap();
    for order in [2usize, 3, 4] {
        let mut oracle: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for seq in &sessions {
            if seq.len() >= order {
                for i in 0..=(seq.len() - order) {
                    *oracle.entry(seq[i..i + order].to_vec()).or_insert(0) += 1;
                }
            }
        }
        let rows: Vec<_> = table.rows.iter().filter(|r| r.order == order).collect();
        assert_eq!(rows.len(), oracle.len());
        for row in rows {
            let key: Vec<u32> = row
                .ngram
                .iter()
                .map(|name| lex.symbol(name).unwrap())
                .collect();
            assert_eq!(row.observed, oracle[&key]);
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("[PASS] criterion 1: sequence-analysis oracles ({elapsed:?})");
}

fn record(platform: Platform, minutes: f64, observed: bool) -> DurationRecord {
    DurationRecord {
        user_id: "u".to_string(),
        platform,
        duration_minutes: minutes,
        observed,
    }
}

fn cox_fixture() -> Vec<DurationRecord> {
    vec![
        record(Platform::Facebook, 1.0, true),
        record(Platform::Facebook, 2.0, true),
        record(Platform::Facebook, 3.0, true),
        record(Platform::Facebook, 4.0, false),
        record(Platform::Facebook, 6.0, true),
        record(Platform::Facebook, 9.0, true),
        record(Platform::YouTube, 2.5, true),
        record(Platform::YouTube, 5.0, true),
        record(Platform::YouTube, 7.0, false),
        record(Platform::YouTube, 10.0, true),
        record(Platform::YouTube, 12.0, false),
        record(Platform::YouTube, 14.0, true),
    ]
}

/// Breslow partial log-likelihood for one binary covariate, written
/// directly from the definition.
fn breslow_ll(records: &[DurationRecord], beta: f64) -> f64 {
    let mut times: Vec<f64> = records
        .iter()
        .filter(|r| r.observed)
        .map(|r| r.duration_minutes)
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut ll = 0.0;
    for &t in &times {
        let events: Vec<_> = records
            .iter()
            .filter(|r| r.observed && r.duration_minutes == t)
            .collect();
        let risk: f64 = records
            .iter()
            .filter(|r| r.duration_minutes >= t)
            .map(|r| if r.platform == Platform::Facebook { beta.exp() } else { 1.0 })
            .sum();
        for e in &events {
            ll += if e.platform == Platform::Facebook { beta } else { 0.0 };
        }
        ll -= events.len() as f64 * risk.ln();
    }
    ll
}

#[test]
fn criterion_2_survival_oracles() {
    let started = Instant::now();

    // Hand-computed product-limit values.
    let all_observed: Vec<DurationRecord> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&t| record(Platform::Facebook, t, true))
        .collect();
    // Hand computation follows the product-limit factors: S(1) = 1 - 1/3,
    // S(2) = S(1)(1 - 1/2), S(3) = 0.
    let curve = &survival::kaplan_meier(&all_observed)[0];
    assert_eq!(curve.times, vec![1.0, 2.0, 3.0]);
    assert_eq!(curve.survival[0], 1.0 - 1.0 / 3.0);
    assert_eq!(curve.survival[1], (1.0 - 1.0 / 3.0) * (1.0 - 1.0 / 2.0));
    assert_eq!(curve.survival[2], 0.0);

    let censored = vec![
        record(Platform::Facebook, 1.0, true),
        record(Platform::Facebook, 2.0, false),
        record(Platform::Facebook, 3.0, true),
    ];
    let curve = &survival::kaplan_meier(&censored)[0];
    assert_eq!(curve.times, vec![1.0, 3.0]);
    assert_eq!(curve.survival[0], 1.0 - 1.0 / 3.0);
    assert_eq!(curve.survival[1], 0.0);

    // Cox against a partial-likelihood grid scan.
    let records = cox_fixture();
    let fit = survival::cox_fit(&records, &Platform::YouTube).unwrap();
    let mut best_beta = 0.0;
    let mut best_ll = f64::NEG_INFINITY;
    let mut beta = -5.0;
    while beta <= 5.0 {
        let ll = breslow_ll(&records, beta);
        if ll > best_ll {
            best_ll = ll;
            best_beta = beta;
        }
        beta += 1e-3;
    }
    let (mut lo, mut hi) = (best_beta - 2e-3, best_beta + 2e-3);
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if breslow_ll(&records, m1) < breslow_ll(&records, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let oracle = (lo + hi) / 2.0;
    assert!(
        (fit.coefficients[0] - oracle).abs() < 1e-4,
        "newton {} vs scan {oracle}",
        fit.coefficients[0]
    );

    // Rescaling durations leaves coefficients unchanged.
    let scaled: Vec<DurationRecord> = records
        .iter()
        .map(|r| record(r.platform.clone(), r.duration_minutes * 123.456, r.observed))
        .collect();
    let fit_scaled = survival::cox_fit(&scaled, &Platform::YouTube).unwrap();
    for (a, b) in fit.coefficients.iter().zip(&fit_scaled.coefficients) {
        assert!((a - b).abs() < 1e-8);
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("[PASS] criterion 2: survival oracles ({elapsed:?})");
}

/// Platform name of a platform-activity descriptor.
fn platform_of(descriptor: &str) -> &str {
    descriptor.split('_').next().unwrap_or("")
}

#[test]
fn criterion_3_hmm_recovers_planted_platform_regimes() {
    let started = Instant::now();
    let n_seeds = 10u64;
    let mut recovered = 0;

    for seed in 0..n_seeds {
        let corpus = synth::generate(&SynthConfig::small(4000 + seed, 200)).unwrap();
        let mut daily: Vec<traceseq::UserSequence> = Vec::new();
        for user in &corpus {
            for (_, day) in preprocess::split_daily(user) {
                daily.push(day);
            }
        }
        let (encoded, lexicon) = encode_corpus(&daily, LexiconMode::PlatformActivity).unwrap();

        let opts = FitOptions {
            restarts: 3,
            max_iterations: 200,
            tolerance: 1e-5,
            ..FitOptions::default()
        };
        let (table, models) =
            hmm::select_states(&encoded, lexicon.len(), &[2, 3, 4, 5, 6], seed, &opts).unwrap();
        if table.chosen_k != 4 {
            continue;
        }

        // Recovery also requires the chosen model to express the planted
        // structure: each state concentrated on one platform's activities,
        // every state's max transition its self-transition.
        let model = models.iter().find(|m| m.k == 4).expect("K=4 fitted");
        let structure_ok = (0..4).all(|state| {
            let mut per_platform: BTreeMap<&str, f64> = BTreeMap::new();
            for (sym, mass) in model.emission[state].iter().enumerate() {
                let name = platform_of(lexicon.decode(sym as u32).unwrap());
                *per_platform.entry(name).or_insert(0.0) += mass;
            }
            let dominant = per_platform.values().cloned().fold(0.0, f64::max);
            let self_p = model.transition[state][state];
            let max_p = model.transition[state]
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            dominant >= 0.70 && self_p == max_p
        });
        if structure_ok {
            recovered += 1;
        }
    }

    assert!(
        recovered >= 8,
        "planted structure recovered in only {recovered}/{n_seeds} seeds"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 3: HMM recovery, K=4 with planted structure in {recovered}/{n_seeds} seeds ({elapsed:?})"
    );
}

#[test]
fn criterion_4_em_and_newton_monotonicity() {
    let started = Instant::now();

    // Baum-Welch log-likelihood non-decreasing at every iteration, 20 runs.
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let seqs: Vec<Vec<u32>> = (0..12)
            .map(|_| {
                let l = rng.gen_range(20..60);
                (0..l).map(|_| rng.gen_range(0..6)).collect()
            })
            .collect();
        let opts = FitOptions {
            restarts: 1,
            ..FitOptions::default()
        };
        let model = hmm::fit(&seqs, 6, 3, seed, &opts).unwrap();
        assert!(model.loglik_trace.len() >= 2);
        for pair in model.loglik_trace.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-8 * pair[0].abs().max(1.0),
                "seed {seed}: EM decreased {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    // Cox partial log-likelihood non-decreasing across accepted steps.
    let mut rng = ChaCha8Rng::seed_from_u64(7777);
    for _ in 0..10 {
        let records: Vec<DurationRecord> = (0..40)
            .map(|_| {
                let platform = match rng.gen_range(0..3) {
                    0 => Platform::Facebook,
                    1 => Platform::Instagram,
                    _ => Platform::YouTube,
                };
                record(
                    platform,
                    rng.gen_range(1..500) as f64 / 10.0,
                    rng.gen_bool(0.8),
                )
            })
            .collect();
        if let Ok(fit) = survival::cox_fit(&records, &Platform::YouTube) {
            assert!(!fit.ll_trace.is_empty());
            for pair in fit.ll_trace.windows(2) {
                assert!(pair[1] >= pair[0], "cox ll decreased {pair:?}");
            }
        }
    }

    let elapsed = started.elapsed();
    println!("[PASS] criterion 4: EM and Newton monotonicity ({elapsed:?})");
}

#[test]
fn criterion_5_network_conservation_modularity_and_planted_blocks() {
    let started = Instant::now();

    // Edge-weight conservation on an arbitrary corpus.
    let corpus = synth::generate(&SynthConfig::small(31, 40)).unwrap();
    let (encoded, lexicon) = encode_corpus(&corpus, LexiconMode::PlatformActivity).unwrap();
    let g = graph::build_graph(&encoded, &lexicon);
    let expected: u64 = encoded.iter().map(|s| (s.len() - 1) as u64).sum();
    assert_eq!(g.total_weight(), expected);

    // Reported modularity equals an independent recomputation.
    let communities = graph::communities(&g).unwrap();
    let recomputed = graph::modularity_of(&g, &communities.assignment);
    assert!(
        (communities.modularity - recomputed).abs() <= 1e-12,
        "Q {} vs recomputed {recomputed}",
        communities.modularity
    );

    // Planted 2-block transition structure: symbols 0..5 and 5..10 with
    // rare cross-block hops.
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let mut block_seqs: Vec<Vec<u32>> = Vec::new();
    for _ in 0..40 {
        let mut block = rng.gen_range(0..2u32);
        let mut seq = Vec::with_capacity(60);
        for _ in 0..60 {
            seq.push(block * 5 + rng.gen_range(0..5));
            if rng.gen_bool(0.03) {
                block = 1 - block;
            }
        }
        block_seqs.push(seq);
    }
    let block_lex = lexicon_of(&["a0", "a1", "a2", "a3", "a4", "b0", "b1", "b2", "b3", "b4"]);
    let planted = graph::build_graph(&block_seqs, &block_lex);
    let detected = graph::communities(&planted).unwrap();
    assert_eq!(detected.n_communities, 2, "expected exactly 2 communities");
    assert!(detected.modularity > 0.3, "Q = {}", detected.modularity);
    // The split must be the planted one.
    for sym in 0..5usize {
        assert_eq!(detected.assignment[sym], detected.assignment[0]);
        assert_eq!(detected.assignment[sym + 5], detected.assignment[5]);
    }
    assert_ne!(detected.assignment[0], detected.assignment[5]);

    let elapsed = started.elapsed();
    println!(
        "[PASS] criterion 5: network conservation + planted 2-block Q={:.3} ({elapsed:?})",
        detected.modularity
    );
}

#[test]
fn criterion_6_process_mining_oracles_and_conservation() {
    let started = Instant::now();

    // DFG frequencies against brute-force pair counting on 15 cases.
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let platforms = [Platform::TikTok, Platform::Instagram];
    let activities = ["watch_history", "likes"];
    let make_case = |idx: usize, rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..6);
        let mut t = 0i64;
        let sessions: Vec<traceseq::Session> = (0..n)
            .map(|_| {
                t += rng.gen_range(30..900);
                let platform = platforms[rng.gen_range(0..2)].clone();
                traceseq::Session {
                    user_id: format!("u{idx}"),
                    symbol: format!("{}_{}", platform.name(), activities[rng.gen_range(0..2)]),
                    platform,
                    start: t,
                    end: t + 10,
                    count: 1,
                }
            })
            .collect();
        procmine::Case {
            user_id: format!("u{idx}"),
            day: 0,
            sessions,
        }
    };
    let cases: Vec<procmine::Case> = (0..15).map(|i| make_case(i, &mut rng)).collect();
    let dfg = procmine::build_dfg(&cases).unwrap();

    let mut oracle: BTreeMap<(String, String), u64> = BTreeMap::new();
    for case in &cases {
        *oracle
            .entry((procmine::START.into(), case.sessions[0].symbol.clone()))
            .or_insert(0) += 1;
        for pair in case.sessions.windows(2) {
            if pair[0].platform != pair[1].platform {
                *oracle
                    .entry((pair[0].symbol.clone(), procmine::PLATFORM_SWITCH.into()))
                    .or_insert(0) += 1;
                *oracle
                    .entry((procmine::PLATFORM_SWITCH.into(), pair[1].symbol.clone()))
                    .or_insert(0) += 1;
            } else {
                *oracle
                    .entry((pair[0].symbol.clone(), pair[1].symbol.clone()))
                    .or_insert(0) += 1;
            }
        }
        *oracle
            .entry((case.sessions.last().unwrap().symbol.clone(), procmine::END.into()))
            .or_insert(0) += 1;
    }
    let got: BTreeMap<(String, String), u64> = dfg
        .edges
        .iter()
        .map(|(k, v)| (k.clone(), v.frequency))
        .collect();
    assert_eq!(got, oracle);

    // START/END case conservation on synthetic corpora.
    for seed in [5u64, 6, 7] {
        let corpus = synth::generate(&SynthConfig::small(seed, 30)).unwrap();
        let sessions: Vec<Vec<traceseq::Session>> = corpus
            .iter()
            .map(|s| preprocess::collapse_sessions(s, 10).unwrap())
            .collect();
        let cases = procmine::daily_cases(&sessions);
        let dfg = procmine::build_dfg(&cases).unwrap();
        assert_eq!(dfg.start_out_frequency(), dfg.cases);
        assert_eq!(dfg.end_in_frequency(), dfg.cases);

        // Top-10 variants: bounded by total cases, deterministic order.
        let top = procmine::top_variants(&cases, 10).unwrap();
        let covered: u64 = top.rows.iter().map(|(_, n)| n).sum();
        assert!(covered <= top.total_cases);
        assert_eq!(top, procmine::top_variants(&cases, 10).unwrap());
        for pair in top.rows.windows(2) {
            assert!(
                pair[0].1 > pair[1].1 || (pair[0].1 == pair[1].1 && pair[0].0 < pair[1].0),
                "variant order violated"
            );
        }
    }

    let elapsed = started.elapsed();
    println!("[PASS] criterion 6: process-mining oracles ({elapsed:?})");
}

/// Mean silhouette over all points, Euclidean in 2-d.
fn silhouette(coords: &[[f64; 2]], labels: &[usize]) -> f64 {
    let n = coords.len();
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(coords[i], coords[j]);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        let a = if counts[own] > 0 {
            sums[own] / counts[own] as f64
        } else {
            0.0
        };
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

#[test]
fn criterion_7_embedding_oracles() {
    let started = Instant::now();

    // Analytic SGNS gradient against central finite differences.
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let h = 1e-6;
    for _ in 0..50 {
        let d = rng.gen_range(3..20);
        let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let positive: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let negatives: Vec<Vec<f64>> = (0..rng.gen_range(1..6))
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let (g_center, _, _) = embed::sgns::gradients(&center, &positive, &negatives);
        let mut fd = Vec::with_capacity(d);
        for i in 0..d {
            let mut up = center.clone();
            up[i] += h;
            let mut down = center.clone();
            down[i] -= h;
            fd.push(
                (embed::sgns::loss(&up, &positive, &negatives)
                    - embed::sgns::loss(&down, &positive, &negatives))
                    / (2.0 * h),
            );
        }
        let err: f64 = g_center
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err <= 1e-5 * norm.max(1e-8), "gradient error {}", err / norm);
    }

    // Constructed co-occurrence corpus: cosine(X, Y) > cosine(X, Z).
    let mut corpus = Vec::new();
    for _ in 0..80 {
        corpus.push(vec!["X".to_string(), "Y".to_string(), "X".to_string(), "Y".to_string()]);
        corpus.push(vec!["Z".to_string(), "W".to_string(), "Z".to_string(), "W".to_string()]);
    }
    let space = embed::train(
        &corpus,
        &embed::TrainConfig {
            dimensions: 24,
            window: 2,
            negatives: 3,
            epochs: 6,
            seed: 13,
            ..embed::TrainConfig::default()
        },
    )
    .unwrap();
    let x = space.index_of("X").unwrap();
    let y = space.index_of("Y").unwrap();
    let z = space.index_of("Z").unwrap();
    assert!(space.cosine(x, y) > space.cosine(x, z));

    // Three well-separated 100-d Gaussian clusters project to 2-d with a
    // clean silhouette.
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for cluster in 0..3usize {
        for _ in 0..20 {
            let mut v = vec![0.0f64; 100];
            for (i, value) in v.iter_mut().enumerate() {
                *value = rng.gen_range(-1.0..1.0) + if i == cluster { 25.0 } else { 0.0 };
            }
            vectors.push(v);
            labels.push(cluster);
        }
    }
    let projection = embed::project_2d(
        &vectors,
        ProjectionMethod::Tsne,
        &TsneConfig {
            seed: 3,
            ..TsneConfig::default()
        },
    )
    .unwrap();
    assert_eq!(projection.method_used, ProjectionMethod::Tsne);
    let score = silhouette(&projection.coords, &labels);
    assert!(score > 0.5, "silhouette {score}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!("[PASS] criterion 7: embedding oracles, silhouette {score:.3} ({elapsed:?})");
}

#[test]
fn criterion_8_dataset_shape_reproduction() {
    let started = Instant::now();

    let corpus = synth::generate(&SynthConfig::paper_shape(14)).unwrap();
    let report = ingest::summarize(&corpus);

    assert_eq!(report.users, 309);
    let expected: BTreeMap<usize, usize> =
        [(1, 208), (2, 67), (3, 26), (4, 8)].into_iter().collect();
    assert_eq!(report.platform_multiplicity, expected);

    assert!(
        report.length_median < 1000.0,
        "median {}",
        report.length_median
    );
    assert!(
        (3000.0..=5000.0).contains(&report.length_mean),
        "mean {}",
        report.length_mean
    );
    // Right skew: mean far above median, heavy tail present.
    assert!(report.length_mean > report.length_median);

    let elapsed = started.elapsed();
    println!(
        "[PASS] criterion 8: dataset shape, median {} mean {:.0} max {} ({elapsed:?})",
        report.length_median, report.length_mean, report.length_max
    );
}
