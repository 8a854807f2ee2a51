//! Transition-network subcommand: DOT + edge list, centralities and
//! communities.

use std::path::Path;

use traceseq::graph;
use traceseq::Result;

use crate::config::NetworkConfig;
use crate::output::{atomic_write_with, print_summary};

use super::{encode_sessions, read_corpus, sessionize, Level};

pub fn run_network(
    input: &Path,
    format: Option<&str>,
    out_dir: &Path,
    cfg: &NetworkConfig,
) -> Result<()> {
    let level = Level::parse(&cfg.level)?;
    let (sequences, _) = read_corpus(input, format)?;
    let sessions = sessionize(&sequences, cfg.window_minutes, level)?;
    let (encoded, lexicon) = encode_sessions(&sessions);
    let mut g = graph::build_graph(&encoded, &lexicon);

    // Platform annotations from the sessions that defined each symbol.
    for user in &sessions {
        for s in user {
            if let Some(sym) = lexicon.symbol(&s.symbol) {
                let slot = &mut g.annotations[sym as usize];
                if slot.is_none() {
                    *slot = Some(s.platform.name().to_string());
                }
            }
        }
    }

    let cents = graph::centralities(&g)?;
    let communities = graph::communities(&g)?;

    let dot_path = out_dir.join("graph.dot");
    atomic_write_with(&dot_path, |buf| {
        buf.extend_from_slice(g.to_dot().as_bytes());
        Ok(())
    })?;
    let edges_path = out_dir.join("edges.csv");
    atomic_write_with(&edges_path, |buf| g.write_edge_csv(buf))?;
    let cents_path = out_dir.join("centralities.csv");
    atomic_write_with(&cents_path, |buf| {
        let mut wtr = csv::Writer::from_writer(buf);
        wtr.write_record(["node", "in_strength", "out_strength", "closeness", "harmonic"])
            .map_err(|e| traceseq::Error::invalid(format!("csv: {e}")))?;
        for c in &cents {
            wtr.write_record([
                c.label.as_str(),
                &c.in_strength.to_string(),
                &c.out_strength.to_string(),
                &c.closeness.to_string(),
                &c.harmonic.to_string(),
            ])
            .map_err(|e| traceseq::Error::invalid(format!("csv: {e}")))?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    let communities_path = out_dir.join("communities.json");
    atomic_write_with(&communities_path, |buf| {
        let members: Vec<(String, usize)> = g
            .labels
            .iter()
            .cloned()
            .zip(communities.assignment.iter().copied())
            .collect();
        let doc = serde_json::json!({
            "n_communities": communities.n_communities,
            "modularity": communities.modularity,
            "members": members,
        });
        buf.extend_from_slice(&serde_json::to_vec_pretty(&doc).expect("serializes"));
        Ok(())
    })?;

    print_summary(
        "network",
        &[&dot_path, &edges_path, &cents_path, &communities_path],
        serde_json::json!({
            "nodes": g.node_count(),
            "edges": g.edges.len(),
            "total_weight": g.total_weight(),
            "communities": communities.n_communities,
            "modularity": communities.modularity,
        }),
    );
    Ok(())
}
