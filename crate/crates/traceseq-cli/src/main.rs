//! Command-line front end: ingest -> preprocess -> engines -> file outputs.
//!
//! Every subcommand writes its outputs atomically, prints a one-line JSON
//! summary to stdout and exits 0 on success, 2 on input/config errors and 3
//! on numerical failures.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Level;
use config::RunConfig;
use traceseq::Error;

#[derive(Parser)]
#[command(
    name = "traceseq",
    version,
    about = "User-sequence mining over timestamped event logs"
)]
struct Cli {
    /// TOML run configuration; command-line flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages (1 = single-threaded, 0 = auto).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Corpus file (CSV or JSONL).
    #[arg(long = "in")]
    input: PathBuf,

    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus.
    Synth {
        /// Output corpus path (.csv or .jsonl).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        users: Option<usize>,
        /// Median sequence length of the log-normal.
        #[arg(long)]
        median_length: Option<f64>,
        /// Ln-space standard deviation of the log-normal.
        #[arg(long)]
        sigma: Option<f64>,
        /// Comma-separated users per platform count, e.g. 208,67,26,8.
        #[arg(long)]
        multiplicity: Option<String>,
        #[arg(long)]
        p_stay: Option<f64>,
    },
    /// Parse and validate a corpus, reporting row counts.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus summary: lengths, platforms, multiplicity histogram.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collapse events into sessions.
    Sessions {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<u32>,
        /// activity | platform
        #[arg(long)]
        level: Option<String>,
    },
    /// Significant n-gram motifs over sessionized sequences.
    Motifs {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Optimal-matching distances and hierarchical clustering.
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory (distances.csv, clusters.csv).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
    },
    /// Kaplan-Meier curves and Cox hazards on platform switches.
    Survival {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory (km_<platform>.csv, cox.csv).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Baum-Welch HMM with AIC/BIC state selection.
    Hmm {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory (selection.csv, model.json).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        window: Option<u32>,
    },
    /// Transition network, centralities and communities.
    Network {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory (graph.dot, edges.csv, centralities.csv,
        /// communities.json).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<u32>,
        /// activity | platform
        #[arg(long)]
        level: Option<String>,
    },
    /// Directly-follows graph, transition times and path variants.
    Procmine {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory (dfg.dot, dfg_top.dot, variants.csv,
        /// transition_times.csv).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Train SGNS embeddings and trajectory metrics.
    Embed {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory (vectors.txt, vocab.csv, trajectories.csv).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dimensions: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
    },
    /// Project trained vectors to 2-d coordinates.
    Project {
        /// vectors.txt produced by `embed`.
        #[arg(long)]
        vectors: PathBuf,
        /// Optional vocab.csv for platform/activity columns.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// tsne | pca
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        perplexity: Option<f64>,
    },
}

fn exit_code_of(err: &Error) -> u8 {
    match err {
        Error::SingularModel | Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> traceseq::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;

    if cli.threads > 0 {
        // Later subcommand work draws from this pool; ignore the error if a
        // pool already exists (tests invoke run() repeatedly).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }

    match cli.command {
        Command::Synth {
            out,
            format,
            seed,
            users,
            median_length,
            sigma,
            multiplicity,
            p_stay,
        } => {
            let s = &mut cfg.synth;
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = users {
                s.users = v;
            }
            if let Some(v) = median_length {
                s.median_length = v;
            }
            if let Some(v) = sigma {
                s.sigma = v;
            }
            if let Some(v) = p_stay {
                s.p_stay = v;
            }
            if let Some(spec) = multiplicity {
                s.multiplicity = spec
                    .split(',')
                    .map(|part| {
                        part.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::config(format!("bad multiplicity {spec:?}")))
                    })
                    .collect::<traceseq::Result<Vec<usize>>>()?;
            }
            commands::data::run_synth(&cfg.synth, &out, format.as_deref())
        }
        Command::Ingest { input, out } => {
            commands::data::run_ingest(&input.input, input.format.as_deref(), out.as_deref())
        }
        Command::Report { input, out } => {
            commands::data::run_report(&input.input, input.format.as_deref(), out.as_deref())
        }
        Command::Sessions {
            input,
            out,
            window,
            level,
        } => {
            if let Some(v) = window {
                cfg.sessions.window_minutes = v;
            }
            if let Some(v) = level {
                cfg.sessions.level = v;
            }
            commands::data::run_sessions(
                &input.input,
                input.format.as_deref(),
                &out,
                cfg.sessions.window_minutes,
                Level::parse(&cfg.sessions.level)?,
            )
        }
        Command::Motifs {
            input,
            out,
            window,
            alpha,
        } => {
            if let Some(v) = window {
                cfg.motifs.window_minutes = v;
            }
            if let Some(v) = alpha {
                cfg.motifs.alpha = v;
            }
            commands::seqa::run_motifs(&input.input, input.format.as_deref(), &out, &cfg.motifs)
        }
        Command::Cluster {
            input,
            out,
            k,
            window,
            lo,
            hi,
        } => {
            if let Some(v) = k {
                cfg.cluster.k = v;
            }
            if let Some(v) = window {
                cfg.cluster.window_minutes = v;
            }
            if let Some(v) = lo {
                cfg.cluster.lo = v;
            }
            if let Some(v) = hi {
                cfg.cluster.hi = v;
            }
            commands::seqa::run_cluster(&input.input, input.format.as_deref(), &out, &cfg.cluster)
        }
        Command::Survival {
            input,
            out,
            window,
            baseline,
        } => {
            if let Some(v) = window {
                cfg.survival.window_minutes = v;
            }
            if let Some(v) = baseline {
                cfg.survival.baseline = v;
            }
            commands::survival::run_survival(
                &input.input,
                input.format.as_deref(),
                &out,
                &cfg.survival,
            )
        }
        Command::Hmm {
            input,
            out,
            seed,
            k_min,
            k_max,
            restarts,
            window,
        } => {
            if let Some(v) = seed {
                cfg.hmm.seed = v;
            }
            if let Some(v) = k_min {
                cfg.hmm.k_min = v;
            }
            if let Some(v) = k_max {
                cfg.hmm.k_max = v;
            }
            if let Some(v) = restarts {
                cfg.hmm.restarts = v;
            }
            if let Some(v) = window {
                cfg.hmm.window_minutes = v;
            }
            commands::hmm::run_hmm(&input.input, input.format.as_deref(), &out, &cfg.hmm)
        }
        Command::Network {
            input,
            out,
            window,
            level,
        } => {
            if let Some(v) = window {
                cfg.network.window_minutes = v;
            }
            if let Some(v) = level {
                cfg.network.level = v;
            }
            commands::network::run_network(
                &input.input,
                input.format.as_deref(),
                &out,
                &cfg.network,
            )
        }
        Command::Procmine {
            input,
            out,
            window,
            top_k,
        } => {
            if let Some(v) = window {
                cfg.procmine.window_minutes = v;
            }
            if let Some(v) = top_k {
                cfg.procmine.top_k = v;
            }
            commands::procmine::run_procmine(
                &input.input,
                input.format.as_deref(),
                &out,
                &cfg.procmine,
            )
        }
        Command::Embed {
            input,
            out,
            seed,
            dimensions,
            epochs,
            min_count,
        } => {
            if let Some(v) = seed {
                cfg.embed.seed = v;
            }
            if let Some(v) = dimensions {
                cfg.embed.dimensions = v;
            }
            if let Some(v) = epochs {
                cfg.embed.epochs = v;
            }
            if let Some(v) = min_count {
                cfg.embed.min_count = v;
            }
            commands::embedding::run_embed(&input.input, input.format.as_deref(), &out, &cfg.embed)
        }
        Command::Project {
            vectors,
            vocab,
            out,
            method,
            seed,
            iterations,
            perplexity,
        } => {
            if let Some(v) = method {
                cfg.project.method = v;
            }
            if let Some(v) = seed {
                cfg.project.seed = v;
            }
            if let Some(v) = iterations {
                cfg.project.iterations = v;
            }
            if let Some(v) = perplexity {
                cfg.project.perplexity = v;
            }
            commands::embedding::run_project(&vectors, vocab.as_deref(), &out, &cfg.project)
        }
    }
}

fn main() -> ExitCode {
    // Clap exits 2 on unknown flags/usage errors, matching the input-error
    // convention.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_of(&err))
        }
    }
}
