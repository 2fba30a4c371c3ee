//! Corpus-level views built on the association scores: difficulty buckets
//! over sentences and per-token mapping/frequency tables.

use std::fmt::Write as _;

use crate::bmi::{extends, pmi_term, score_sentence};
use crate::cooccur::CooccurStats;
use crate::corpus::{ParallelCorpus, Side};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("bucket count {k} outside [2, {len}]")]
    BadBucketCount { k: usize, len: usize },
    #[error("token {0:?} is not in the statistics")]
    UnknownToken(String),
    #[error("corpus {0} vocabulary does not extend the statistics vocabulary")]
    VocabMismatch(Side),
}

/// Sentences split into `sizes.len()` buckets of near-equal size by mean
/// target-token score, bucket 0 lowest. Ties break by sentence index, so the
/// partition is a pure function of its inputs.
#[derive(Debug, Clone)]
pub struct BucketAssignment {
    pub sizes: Vec<usize>,
    /// Mean score per sentence, in corpus order.
    pub scores: Vec<f64>,
    /// Bucket index per sentence, in corpus order.
    pub labels: Vec<usize>,
    /// Lowest and highest sentence score in each bucket.
    pub ranges: Vec<(f64, f64)>,
}

impl BucketAssignment {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (score, bucket)) in self.scores.iter().zip(&self.labels).enumerate() {
            let _ = writeln!(out, "index={i} score={score:.6} bucket={bucket}");
        }
        out
    }
}

pub fn bucket_by_avg_bmi(
    stats: &CooccurStats,
    corpus: &ParallelCorpus,
    k: usize,
) -> Result<BucketAssignment, AnalysisError> {
    if corpus.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    if k < 2 || k > corpus.len() {
        return Err(AnalysisError::BadBucketCount {
            k,
            len: corpus.len(),
        });
    }
    if !extends(stats.source_vocab(), corpus.source_vocab()) {
        return Err(AnalysisError::VocabMismatch(Side::Source));
    }
    if !extends(stats.target_vocab(), corpus.target_vocab()) {
        return Err(AnalysisError::VocabMismatch(Side::Target));
    }
    let scores: Vec<f64> = corpus
        .pairs()
        .iter()
        .map(|pair| score_sentence(stats, pair).mean())
        .collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));

    let n = scores.len();
    let mut sizes = vec![n / k; k];
    for size in sizes.iter_mut().take(n % k) {
        *size += 1;
    }
    let mut labels = vec![0usize; n];
    let mut ranges = Vec::with_capacity(k);
    let mut cursor = 0;
    for (bucket, &size) in sizes.iter().enumerate() {
        for &i in &order[cursor..cursor + size] {
            labels[i] = bucket;
        }
        ranges.push((scores[order[cursor]], scores[order[cursor + size - 1]]));
        cursor += size;
    }
    Ok(BucketAssignment {
        sizes,
        scores,
        labels,
        ranges,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingEntry {
    pub source: String,
    pub count: u64,
    /// Log association of the pair under the skip-zero policy.
    pub pmi: f64,
    /// Fraction of the target token's sentences this source co-occurs in.
    pub share: f64,
}

/// Which source tokens a target token co-occurs with, most frequent first.
#[derive(Debug, Clone)]
pub struct MappingReport {
    pub target: String,
    pub target_count: u64,
    pub entries: Vec<MappingEntry>,
    /// Share of the strongest source token: 1.0 means the target always
    /// appears with it, small values mean its sources are scattered.
    pub concentration: f64,
}

impl MappingReport {
    fn cells(&self) -> Vec<[String; 4]> {
        self.entries
            .iter()
            .map(|e| {
                [
                    e.source.clone(),
                    e.count.to_string(),
                    format!("{:.6}", e.pmi),
                    format!("{:.6}", e.share),
                ]
            })
            .collect()
    }

    /// Header line plus a space-aligned column table.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "target={} count={} concentration={:.6}\n",
            self.target, self.target_count, self.concentration
        );
        out.push_str(&align(
            ["source", "count", "pmi", "share"],
            &self.cells(),
        ));
        out
    }

    /// The same rows as tab-separated fields, no header.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        for row in self.cells() {
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        out
    }
}

/// Left-aligns rows under a header, two spaces between columns, no trailing
/// padding on the last column.
fn align<const N: usize>(header: [&str; N], rows: &[[String; N]]) -> String {
    let mut widths: [usize; N] = [0; N];
    for (w, h) in widths.iter_mut().zip(header) {
        *w = h.len();
    }
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: [&str; N]| {
        for (i, cell) in cells.iter().enumerate() {
            if i + 1 == N {
                out.push_str(cell);
            } else {
                let _ = write!(out, "{:<width$}  ", cell, width = widths[i]);
            }
        }
        out.push('\n');
    };
    emit(header);
    for row in rows {
        emit(std::array::from_fn(|i| row[i].as_str()));
    }
    out
}

/// Ranks the source tokens co-occurring with `target` by count, ties by
/// token. `limit` of zero keeps everything.
pub fn mapping_report(
    stats: &CooccurStats,
    target: &str,
    limit: usize,
) -> Result<MappingReport, AnalysisError> {
    let y = stats
        .target_vocab()
        .id(target)
        .ok_or_else(|| AnalysisError::UnknownToken(target.to_string()))?;
    let target_count = stats.target_count(y);
    let mut entries: Vec<MappingEntry> = stats
        .pairs()
        .filter(|&((_, py), _)| py == y)
        .map(|((x, _), c)| MappingEntry {
            source: stats.source_vocab().token(x).unwrap().to_string(),
            count: c,
            pmi: pmi_term(stats, x, y),
            share: c as f64 / target_count as f64,
        })
        .collect();
    entries.sort_unstable_by(|a, b| b.count.cmp(&a.count).then(a.source.cmp(&b.source)));
    if limit > 0 {
        entries.truncate(limit);
    }
    let concentration = entries.first().map_or(0.0, |e| e.share);
    Ok(MappingReport {
        target: target.to_string(),
        target_count,
        entries,
        concentration,
    })
}

/// Document frequencies of one side, most frequent first, ties by token.
/// `limit` of zero keeps everything.
pub fn frequency_table(stats: &CooccurStats, side: Side, limit: usize) -> Vec<(String, u64)> {
    let (vocab, counts): (_, Vec<_>) = match side {
        Side::Source => (stats.source_vocab(), stats.source_counts().collect()),
        Side::Target => (stats.target_vocab(), stats.target_counts().collect()),
    };
    let mut rows: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(id, c)| (vocab.token(id).unwrap().to_string(), c))
        .collect();
    rows.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if limit > 0 {
        rows.truncate(limit);
    }
    rows
}

pub fn render_frequency_table(rows: &[(String, u64)]) -> String {
    let cells: Vec<[String; 2]> = rows
        .iter()
        .map(|(t, c)| [t.clone(), c.to_string()])
        .collect();
    align(["token", "count"], &cells)
}

pub fn render_frequency_tsv(rows: &[(String, u64)]) -> String {
    let mut out = String::new();
    for (t, c) in rows {
        let _ = writeln!(out, "{t}\t{c}");
    }
    out
}
