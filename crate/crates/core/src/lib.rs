//! Bilingual mutual information over sentence-aligned parallel corpora.
//!
//! The pipeline: load a corpus ([`corpus`]), count sentence-level document
//! and co-occurrence frequencies ([`cooccur`]), score target tokens by their
//! log association with the source sentence ([`bmi`]), turn scores or counts
//! into per-token training weights ([`bmi`]), and feed those into a weighted
//! cross-entropy loss ([`loss`]). [`lexdiv`] measures lexical diversity of
//! token streams and [`analysis`] builds bucket and mapping reports on top
//! of the statistics. Everything is deterministic: same inputs, same bytes.

pub mod analysis;
pub mod bmi;
pub mod cli;
pub mod cooccur;
pub mod corpus;
pub mod lexdiv;
pub mod loss;
mod util;

pub use bmi::{score_sentence, score_token, SentenceBmi, WeightSchedule};
pub use cooccur::{build_stats, CooccurStats};
pub use corpus::{load_parallel_corpus, ParallelCorpus, Vocab};
