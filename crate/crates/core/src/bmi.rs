//! Pointwise bilingual association scores and the token weight schedules
//! derived from them.
//!
//! A target token's score against a source sentence is the sum over the
//! sentence's distinct source tokens x of ln(f(x,y) * K / (f(x) * f(y))),
//! using the sentence-level document frequencies in [`CooccurStats`]. Pairs
//! never seen together contribute nothing under the default policy.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::cooccur::CooccurStats;
use crate::corpus::{ParallelCorpus, SentencePair, Side, TokenId, Vocab};

pub const DEFAULT_BMI_SCALE: f64 = 0.1;
pub const DEFAULT_BMI_BASE: f64 = 1.0;
pub const DEFAULT_BMI_THRESHOLD: f64 = 0.4;
pub const DEFAULT_AMPLITUDE: f64 = 1.0;
pub const DEFAULT_DECAY: f64 = 1e-5;

#[derive(Debug, thiserror::Error)]
pub enum BmiError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus {0} vocabulary does not extend the statistics vocabulary")]
    VocabMismatch(Side),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("{path} line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
}

/// What to do when a queried pair was never observed together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroPolicy {
    /// The pair contributes nothing to the sum.
    Skip,
    /// Score the pair as if it had been seen this many times (at least 1).
    Floor(u64),
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreOptions {
    pub zero_policy: ZeroPolicy,
    /// Count each distinct source token once per sentence, mirroring how the
    /// statistics were collected. Turn off to weight by occurrence.
    pub dedup_source: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            zero_policy: ZeroPolicy::Skip,
            dedup_source: true,
        }
    }
}

/// One pair's log association ratio. Tokens outside the statistics (zero
/// marginals) score zero under either policy.
pub fn pmi_term(stats: &CooccurStats, x: TokenId, y: TokenId) -> f64 {
    pmi_term_with(stats, x, y, ZeroPolicy::Skip)
}

pub fn pmi_term_with(stats: &CooccurStats, x: TokenId, y: TokenId, policy: ZeroPolicy) -> f64 {
    let a = stats.source_count(x);
    let b = stats.target_count(y);
    if a == 0 || b == 0 {
        return 0.0;
    }
    let c = match (stats.pair_count(x, y), policy) {
        (0, ZeroPolicy::Skip) => return 0.0,
        (0, ZeroPolicy::Floor(floor)) => floor.max(1),
        (c, _) => c,
    };
    (c as f64 * stats.k() as f64 / (a as f64 * b as f64)).ln()
}

pub fn score_token(stats: &CooccurStats, source: &[TokenId], y: TokenId) -> f64 {
    score_token_with(stats, source, y, &ScoreOptions::default())
}

pub fn score_token_with(
    stats: &CooccurStats,
    source: &[TokenId],
    y: TokenId,
    opts: &ScoreOptions,
) -> f64 {
    if opts.dedup_source {
        let mut xs = source.to_vec();
        xs.sort_unstable();
        xs.dedup();
        xs.iter()
            .map(|&x| pmi_term_with(stats, x, y, opts.zero_policy))
            .sum()
    } else {
        source
            .iter()
            .map(|&x| pmi_term_with(stats, x, y, opts.zero_policy))
            .sum()
    }
}

/// Scores for every target position of one sentence pair.
#[derive(Debug, Clone)]
pub struct SentenceBmi {
    /// Zero-based position of the pair in its corpus.
    pub index: usize,
    pub scores: Vec<f64>,
}

impl SentenceBmi {
    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

pub fn score_sentence(stats: &CooccurStats, pair: &SentencePair) -> SentenceBmi {
    score_sentence_with(stats, pair, &ScoreOptions::default())
}

pub fn score_sentence_with(
    stats: &CooccurStats,
    pair: &SentencePair,
    opts: &ScoreOptions,
) -> SentenceBmi {
    let scores = pair
        .target
        .iter()
        .map(|&y| score_token_with(stats, &pair.source, y, opts))
        .collect();
    SentenceBmi {
        index: pair.index,
        scores,
    }
}

/// How a target token's training weight is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSchedule {
    /// Affine in the association score, zero below the threshold.
    Bmi { scale: f64, base: f64, threshold: f64 },
    /// Decaying in the token's corpus count: amplitude * exp(-decay*n) + 1.
    Exponential { amplitude: f64, decay: f64 },
    /// Rises then decays: amplitude * n^2 * exp(-decay*n) + 1, peaking
    /// near n = 2/decay.
    ChiSquare { amplitude: f64, decay: f64 },
}

impl WeightSchedule {
    pub fn validate(&self) -> Result<(), BmiError> {
        let bad = |reason: &str| Err(BmiError::InvalidSchedule(reason.to_string()));
        match *self {
            WeightSchedule::Bmi {
                scale,
                base,
                threshold,
            } => {
                if !(scale.is_finite() && base.is_finite() && threshold.is_finite()) {
                    return bad("scale, base and threshold must be finite");
                }
                if scale <= 0.0 {
                    return bad("scale must be positive");
                }
                if threshold < 0.0 {
                    return bad("threshold must be non-negative");
                }
                // The base may be negative as long as no kept token can end
                // up below zero, i.e. the weight at the threshold itself.
                if base + scale * threshold < 0.0 {
                    return bad("base + scale * threshold must be non-negative");
                }
            }
            WeightSchedule::Exponential { amplitude, decay }
            | WeightSchedule::ChiSquare { amplitude, decay } => {
                if !(amplitude.is_finite() && decay.is_finite()) {
                    return bad("amplitude and decay must be finite");
                }
                if amplitude <= 0.0 {
                    return bad("amplitude must be positive");
                }
                if decay <= 0.0 {
                    return bad("decay must be positive");
                }
            }
        }
        Ok(())
    }

    fn token_weight(
        &self,
        stats: &CooccurStats,
        source: &[TokenId],
        y: TokenId,
        opts: &ScoreOptions,
    ) -> f64 {
        match *self {
            WeightSchedule::Bmi {
                scale,
                base,
                threshold,
            } => weight_bmi(score_token_with(stats, source, y, opts), scale, base, threshold),
            WeightSchedule::Exponential { amplitude, decay } => {
                weight_exponential(stats.target_count(y), amplitude, decay)
            }
            WeightSchedule::ChiSquare { amplitude, decay } => {
                weight_chisquare(stats.target_count(y), amplitude, decay)
            }
        }
    }
}

pub fn weight_bmi(bmi: f64, scale: f64, base: f64, threshold: f64) -> f64 {
    if bmi < threshold {
        0.0
    } else {
        scale * bmi + base
    }
}

pub fn weight_exponential(count: u64, amplitude: f64, decay: f64) -> f64 {
    amplitude * (-decay * count as f64).exp() + 1.0
}

pub fn weight_chisquare(count: u64, amplitude: f64, decay: f64) -> f64 {
    let n = count as f64;
    amplitude * n * n * (-decay * n).exp() + 1.0
}

/// True when the shorter vocabulary is an exact prefix of the longer, so
/// shared token ids agree. A corpus loaded seeded with the statistics
/// vocabularies always satisfies this.
pub(crate) fn extends(stats_vocab: &Vocab, corpus_vocab: &Vocab) -> bool {
    let n = stats_vocab.len().min(corpus_vocab.len());
    stats_vocab.tokens().take(n).eq(corpus_vocab.tokens().take(n))
}

/// Computes the schedule's weight for every target token, one row per
/// sentence pair. Weights are clamped at zero: a token below the usefulness
/// threshold is dropped, never negatively weighted.
pub fn compute_weights(
    stats: &CooccurStats,
    corpus: &ParallelCorpus,
    schedule: &WeightSchedule,
    opts: &ScoreOptions,
) -> Result<Vec<Vec<f64>>, BmiError> {
    schedule.validate()?;
    if !extends(stats.source_vocab(), corpus.source_vocab()) {
        return Err(BmiError::VocabMismatch(Side::Source));
    }
    if !extends(stats.target_vocab(), corpus.target_vocab()) {
        return Err(BmiError::VocabMismatch(Side::Target));
    }
    Ok(corpus
        .pairs()
        .par_iter()
        .map(|pair| {
            pair.target
                .iter()
                .map(|&y| {
                    let w = schedule.token_weight(stats, &pair.source, y, opts);
                    if w <= 0.0 {
                        0.0
                    } else {
                        w
                    }
                })
                .collect()
        })
        .collect())
}

/// Writes one line per sentence pair: tab-separated six-decimal weights, one
/// per target token. Repeated emissions are byte-identical. Returns the
/// summary of what was written.
pub fn emit_weights(
    stats: &CooccurStats,
    corpus: &ParallelCorpus,
    schedule: &WeightSchedule,
    opts: &ScoreOptions,
    path: &Path,
) -> Result<WeightSummary, BmiError> {
    let rows = compute_weights(stats, corpus, schedule, opts)?;
    let mut text = String::new();
    for row in &rows {
        for (j, w) in row.iter().enumerate() {
            if j > 0 {
                text.push('\t');
            }
            let _ = write!(text, "{w:.6}");
        }
        text.push('\n');
    }
    crate::util::write_atomic(path, text.as_bytes())?;
    Ok(summarize_weights(&rows))
}

/// Reads a weight file back into one row of weights per sentence pair,
/// insisting on the exact format [`emit_weights`] produces.
pub fn read_weight_file(path: &Path) -> Result<Vec<Vec<f64>>, BmiError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut row = Vec::new();
        for field in line.split('\t') {
            let parsed = field.split_once('.').and_then(|(int, frac)| {
                let shape = !int.is_empty()
                    && int.bytes().all(|b| b.is_ascii_digit())
                    && frac.len() == 6
                    && frac.bytes().all(|b| b.is_ascii_digit());
                if shape {
                    field.parse::<f64>().ok()
                } else {
                    None
                }
            });
            match parsed {
                Some(w) => row.push(w),
                None => {
                    return Err(BmiError::Parse {
                        path: name,
                        line: i + 1,
                        reason: format!("malformed weight field {field:?}"),
                    })
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Aggregate shape of an emitted weight file, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSummary {
    pub rows: usize,
    pub tokens: usize,
    /// Tokens dropped by the threshold gate.
    pub zeros: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize_weights(rows: &[Vec<f64>]) -> WeightSummary {
    let tokens: usize = rows.iter().map(Vec::len).sum();
    let zeros = rows.iter().flatten().filter(|&&w| w == 0.0).count();
    let sum: f64 = rows.iter().flatten().sum();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &w in rows.iter().flatten() {
        min = min.min(w);
        max = max.max(w);
    }
    WeightSummary {
        rows: rows.len(),
        tokens,
        zeros,
        mean: if tokens == 0 { 0.0 } else { sum / tokens as f64 },
        min: if tokens == 0 { 0.0 } else { min },
        max: if tokens == 0 { 0.0 } else { max },
    }
}
