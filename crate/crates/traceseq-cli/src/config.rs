//! TOML run configuration; command-line flags override file values.

use std::path::Path;

use serde::Deserialize;

use traceseq::{Error, Result};

fn default_window() -> u32 {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionsConfig {
    pub window_minutes: u32,
    /// `activity` (platform + activity type) or `platform`.
    pub level: String,
}

impl Default for SessionsConfig {
    fn default() -> Self {
        SessionsConfig {
            window_minutes: default_window(),
            level: "activity".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotifsConfig {
    pub window_minutes: u32,
    pub orders: Vec<usize>,
    pub alpha: f64,
}

impl Default for MotifsConfig {
    fn default() -> Self {
        MotifsConfig {
            window_minutes: default_window(),
            orders: vec![2, 3, 4],
            alpha: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub window_minutes: u32,
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub substitution: f64,
    pub indel: f64,
    pub normalize: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            window_minutes: default_window(),
            k: 20,
            lo: 25.0,
            hi: 75.0,
            substitution: 2.0,
            indel: 1.0,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurvivalConfig {
    pub window_minutes: u32,
    pub baseline: String,
    /// `include` or `exclude` single-platform users.
    pub single_platform: String,
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        SurvivalConfig {
            window_minutes: default_window(),
            baseline: "YouTube".to_string(),
            single_platform: "include".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmmConfig {
    pub window_minutes: u32,
    pub k_min: usize,
    pub k_max: usize,
    pub lo: f64,
    pub hi: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig {
            window_minutes: default_window(),
            k_min: 2,
            k_max: 6,
            lo: 25.0,
            hi: 90.0,
            restarts: 5,
            max_iterations: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub window_minutes: u32,
    pub level: String,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            window_minutes: default_window(),
            level: "activity".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcmineConfig {
    pub window_minutes: u32,
    pub top_k: usize,
}

impl Default for ProcmineConfig {
    fn default() -> Self {
        ProcmineConfig {
            window_minutes: default_window(),
            top_k: 10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dimensions: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dimensions: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    /// `tsne` or `pca`.
    pub method: String,
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            method: "tsne".to_string(),
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthCliConfig {
    pub seed: u64,
    pub users: usize,
    /// Users with 1, 2, 3 and 4 platforms; must sum to `users`.
    pub multiplicity: Vec<usize>,
    pub median_length: f64,
    pub sigma: f64,
    pub p_stay: f64,
    /// ISO dates, inclusive start / exclusive end.
    pub start_date: String,
    pub end_date: String,
}

impl Default for SynthCliConfig {
    fn default() -> Self {
        SynthCliConfig {
            seed: 0,
            users: 309,
            multiplicity: vec![208, 67, 26, 8],
            median_length: 800.0,
            sigma: (2.0 * 5f64.ln()).sqrt(),
            p_stay: 0.9,
            start_date: "2024-05-01".to_string(),
            end_date: "2024-08-01".to_string(),
        }
    }
}

/// Whole run configuration, one section per subcommand.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sessions: SessionsConfig,
    pub motifs: MotifsConfig,
    pub cluster: ClusterConfig,
    pub survival: SurvivalConfig,
    pub hmm: HmmConfig,
    pub network: NetworkConfig,
    pub procmine: ProcmineConfig,
    pub embed: EmbedConfig,
    pub project: ProjectConfig,
    pub synth: SynthCliConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str(&text)
                    .map_err(|e| Error::config(format!("bad config file: {e}")))
            }
        }
    }
}
