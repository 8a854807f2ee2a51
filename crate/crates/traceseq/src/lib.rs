//! Timestamped digital-trace event logs as chronologically ordered
//! user-sequences, with six analytical engines over them.
//!
//! The crate models events, sessions and lexicons ([`model`]), parses and
//! summarizes corpora ([`ingest`]), generates seeded synthetic corpora
//! ([`synth`]) and preprocesses them ([`preprocess`]). On top sit the
//! engines:
//!
//! - [`seqa`]: optimal-matching distances, average-linkage clustering,
//!   significant n-gram motifs
//! - [`survival`]: platform-switch durations, Kaplan-Meier curves, Cox
//!   proportional hazards
//! - [`hmm`]: Baum-Welch training, AIC/BIC state selection, Viterbi
//! - [`graph`]: transition networks, centralities, greedy modularity
//!   communities
//! - [`procmine`]: directly-follows graphs, transition times, path variants
//! - [`embed`]: SGNS embeddings, nearest neighbors, PCA / exact t-SNE
//!   projections, trajectory metrics
//!
//! Data-parallel inner loops (distance matrices, per-user synthesis, HMM
//! restarts) run on rayon under the default `parallel` feature and fall
//! back to sequential iteration without it; both paths produce bitwise
//! identical results.

pub mod embed;
pub mod error;
pub mod graph;
pub mod hmm;
pub mod ingest;
pub mod model;
pub mod preprocess;
pub mod procmine;
pub mod seqa;
pub mod stats;
pub mod survival;
pub mod synth;

pub use error::{Error, Result};
pub use model::{Event, Lexicon, LexiconMode, Platform, Session, TimeWindow, UserSequence};
