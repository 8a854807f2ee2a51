//! Embedding subcommands: SGNS training plus trajectory metrics, and 2-d
//! projection of trained vectors.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use traceseq::embed::{self, EmbeddingSpace, ProjectionMethod, TrainConfig, TsneConfig};
use traceseq::{Error, Result};

use crate::config::{EmbedConfig, ProjectConfig};
use crate::output::{atomic_write_with, print_summary};

use super::read_corpus;

pub fn run_embed(
    input: &Path,
    format: Option<&str>,
    out_dir: &Path,
    cfg: &EmbedConfig,
) -> Result<()> {
    let (sequences, _) = read_corpus(input, format)?;
    let corpus = embed::token_corpus(&sequences);
    let train_cfg = TrainConfig {
        dimensions: cfg.dimensions,
        window: cfg.window,
        negatives: cfg.negatives,
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        min_count: cfg.min_count,
        seed: cfg.seed,
    };
    let space = embed::train(&corpus, &train_cfg)?;

    let vectors_path = out_dir.join("vectors.txt");
    atomic_write_with(&vectors_path, |buf| space.write_text(buf))?;

    // Token metadata so projections can color by platform and activity.
    let mut meta: BTreeMap<String, (String, String)> = BTreeMap::new();
    for seq in &sequences {
        for e in &seq.events {
            let token = traceseq::LexiconMode::SyntheticWord.descriptor(e);
            meta.entry(token)
                .or_insert_with(|| (e.platform.name().to_string(), e.activity.clone()));
        }
    }
    let vocab_path = out_dir.join("vocab.csv");
    atomic_write_with(&vocab_path, |buf| {
        let mut wtr = csv::Writer::from_writer(buf);
        wtr.write_record(["token", "count", "platform", "activity"])
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        for (i, token) in space.tokens.iter().enumerate() {
            let (platform, activity) = meta
                .get(token)
                .cloned()
                .unwrap_or_else(|| (String::new(), String::new()));
            wtr.write_record([
                token.as_str(),
                &space.counts[i].to_string(),
                &platform,
                &activity,
            ])
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        }
        wtr.flush()?;
        Ok(())
    })?;

    let trajectories_path = out_dir.join("trajectories.csv");
    atomic_write_with(&trajectories_path, |buf| {
        let mut wtr = csv::Writer::from_writer(buf);
        wtr.write_record([
            "user_id",
            "entropy_bits",
            "radius_of_gyration",
            "token_count",
            "oov_dropped",
        ])
        .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        for (seq, tokens) in sequences.iter().zip(&corpus) {
            match embed::trajectory_metrics(&space, &seq.user_id, tokens) {
                Ok(summary) => {
                    wtr.write_record([
                        summary.user_id.as_str(),
                        &summary.entropy_bits.to_string(),
                        &summary.radius_of_gyration.to_string(),
                        &summary.token_count.to_string(),
                        &summary.oov_dropped.to_string(),
                    ])
                    .map_err(|e| Error::invalid(format!("csv: {e}")))?;
                }
                // Users whose whole stream fell below min-count are skipped.
                Err(Error::EmptyTrajectory) => {}
                Err(e) => return Err(e),
            }
        }
        wtr.flush()?;
        Ok(())
    })?;

    print_summary(
        "embed",
        &[&vectors_path, &vocab_path, &trajectories_path],
        serde_json::json!({
            "vocabulary": space.vocab_size(),
            "dimensions": space.dimensions,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
        }),
    );
    Ok(())
}

fn load_vocab_meta(path: &Path) -> Result<BTreeMap<String, (String, String)>> {
    let mut meta = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(File::open(path)?);
    for record in rdr.records() {
        let record = record.map_err(|e| Error::invalid(format!("csv: {e}")))?;
        if record.len() >= 4 {
            meta.insert(
                record[0].to_string(),
                (record[2].to_string(), record[3].to_string()),
            );
        }
    }
    Ok(meta)
}

pub fn run_project(
    vectors: &Path,
    vocab: Option<&Path>,
    out: &Path,
    cfg: &ProjectConfig,
) -> Result<()> {
    let space = EmbeddingSpace::read_text(File::open(vectors)?)?;
    let method = match cfg.method.as_str() {
        "pca" => ProjectionMethod::Pca,
        "tsne" => ProjectionMethod::Tsne,
        other => {
            return Err(Error::config(format!(
                "unknown projection method {other:?}"
            )))
        }
    };
    let tsne_cfg = TsneConfig {
        perplexity: cfg.perplexity,
        iterations: cfg.iterations,
        seed: cfg.seed,
        ..TsneConfig::default()
    };
    let projection = embed::project_2d(&space.input, method, &tsne_cfg)?;
    let meta = match vocab {
        Some(path) => load_vocab_meta(path)?,
        None => BTreeMap::new(),
    };

    atomic_write_with(out, |buf| {
        let mut wtr = csv::Writer::from_writer(buf);
        wtr.write_record(["token", "x", "y", "platform", "activity"])
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        for (token, coords) in space.tokens.iter().zip(&projection.coords) {
            let (platform, activity) = meta.get(token).cloned().unwrap_or_else(|| {
                // Best effort without metadata: leading token segment.
                let platform = token.split('_').next().unwrap_or("").to_string();
                (platform, String::new())
            });
            wtr.write_record([
                token.as_str(),
                &coords[0].to_string(),
                &coords[1].to_string(),
                &platform,
                &activity,
            ])
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        }
        wtr.flush()?;
        Ok(())
    })?;

    print_summary(
        "project",
        &[out],
        serde_json::json!({
            "points": projection.coords.len(),
            "method": match projection.method_used {
                ProjectionMethod::Pca => "pca",
                ProjectionMethod::Tsne => "tsne",
            },
            "warning": projection.warning,
        }),
    );
    Ok(())
}
