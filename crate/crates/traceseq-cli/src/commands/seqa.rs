//! Sequence-analysis subcommands: motifs and cluster.

use std::path::Path;

use traceseq::preprocess;
use traceseq::seqa::{self, CostScheme, Normalization};
use traceseq::Result;

use crate::config::{ClusterConfig, MotifsConfig};
use crate::output::{atomic_write_with, print_summary};

use super::{encode_sessions, read_corpus, sessionize, Level};

pub fn run_motifs(
    input: &Path,
    format: Option<&str>,
    out: &Path,
    cfg: &MotifsConfig,
) -> Result<()> {
    let (sequences, _) = read_corpus(input, format)?;
    let sessions = sessionize(&sequences, cfg.window_minutes, Level::Activity)?;
    let (encoded, lexicon) = encode_sessions(&sessions);
    let table = seqa::mine_motifs(&encoded, &lexicon, &cfg.orders, cfg.alpha)?;
    atomic_write_with(out, |buf| table.write_csv(buf))?;
    print_summary(
        "motifs",
        &[out],
        serde_json::json!({
            "tested": table.rows.len(),
            "significant": table.significant().count(),
            "alpha": cfg.alpha,
            "orders": cfg.orders,
        }),
    );
    Ok(())
}

pub fn run_cluster(
    input: &Path,
    format: Option<&str>,
    out_dir: &Path,
    cfg: &ClusterConfig,
) -> Result<()> {
    let (sequences, _) = read_corpus(input, format)?;
    let sessions = sessionize(&sequences, cfg.window_minutes, Level::Activity)?;
    // Filter users by session-sequence length before the quadratic distance
    // pass.
    let kept =
        preprocess::percentile_filter_by(sessions, cfg.lo, cfg.hi, |s: &Vec<_>| s.len())?;
    let ids: Vec<String> = kept
        .iter()
        .map(|s| s.first().map(|x| x.user_id.clone()).unwrap_or_default())
        .collect();
    let (encoded, _) = encode_sessions(&kept);

    let scheme = CostScheme {
        substitution: cfg.substitution,
        indel: cfg.indel,
        normalization: if cfg.normalize {
            Normalization::ByLongerLength
        } else {
            Normalization::None
        },
    };
    let matrix = seqa::distance_matrix(&encoded, &scheme)?;
    let k = cfg.k.min(encoded.len());
    let labels = seqa::cluster_users(&matrix, k)?;

    let distances_path = out_dir.join("distances.csv");
    atomic_write_with(&distances_path, |buf| {
        seqa::write_distance_matrix_csv(buf, &ids, &matrix)
    })?;
    let clusters_path = out_dir.join("clusters.csv");
    atomic_write_with(&clusters_path, |buf| {
        let mut wtr = csv::Writer::from_writer(buf);
        wtr.write_record(["user_id", "cluster", "session_count"])
            .map_err(|e| traceseq::Error::invalid(format!("csv: {e}")))?;
        for (i, id) in ids.iter().enumerate() {
            wtr.write_record([
                id.as_str(),
                &labels[i].to_string(),
                &encoded[i].len().to_string(),
            ])
            .map_err(|e| traceseq::Error::invalid(format!("csv: {e}")))?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    print_summary(
        "cluster",
        &[&distances_path, &clusters_path],
        serde_json::json!({
            "users_clustered": ids.len(),
            "k": k,
            "percentile_band": [cfg.lo, cfg.hi],
        }),
    );
    Ok(())
}
