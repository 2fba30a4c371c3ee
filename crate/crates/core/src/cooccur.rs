//! Sentence-level co-occurrence statistics over a parallel corpus.
//!
//! Counting is by document frequency: a token (or a source/target token
//! pair) is counted at most once per sentence pair no matter how often it
//! repeats inside it. The pair table is sparse; absent entries mean zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{ParallelCorpus, SentencePair, Side, TokenId, Vocab};

pub const DEFAULT_MAX_SENTENCE_LEN: usize = 1024;

/// Below this many pairs the shard-and-merge path is pure overhead.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("sentence {index}: {side} side has {len} tokens, limit is {max}")]
    SentenceTooLong {
        index: usize,
        side: Side,
        len: usize,
        max: usize,
    },
    #[error("statistics were collected over different vocabularies")]
    VocabMismatch,
    #[error("{path} line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: unsupported stats version {found:?}")]
    Version { path: String, found: String },
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub max_sentence_len: usize,
    /// 0 uses every available thread, 1 forces the serial path.
    pub threads: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            max_sentence_len: DEFAULT_MAX_SENTENCE_LEN,
            threads: 0,
        }
    }
}

fn pair_key(x: TokenId, y: TokenId) -> u64 {
    (u64::from(x) << 32) | u64::from(y)
}

fn split_key(key: u64) -> (TokenId, TokenId) {
    ((key >> 32) as TokenId, key as TokenId)
}

/// Document frequencies for one corpus: how many sentence pairs contain each
/// source token, each target token, and each cross-lingual token pair.
#[derive(Debug, Clone)]
pub struct CooccurStats {
    k: u64,
    f_src: Vec<u64>,
    f_tgt: Vec<u64>,
    f_pair: HashMap<u64, u64>,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
}

impl CooccurStats {
    pub fn empty(src_vocab: Vocab, tgt_vocab: Vocab) -> Self {
        let f_src = vec![0; src_vocab.len()];
        let f_tgt = vec![0; tgt_vocab.len()];
        Self {
            k: 0,
            f_src,
            f_tgt,
            f_pair: HashMap::new(),
            src_vocab,
            tgt_vocab,
        }
    }

    /// Counts a slice of pairs (a shard may be empty). The pairs must be
    /// interned against the supplied vocabularies.
    pub fn from_pairs(
        pairs: &[SentencePair],
        src_vocab: &Vocab,
        tgt_vocab: &Vocab,
        max_sentence_len: usize,
    ) -> Result<Self, StatsError> {
        let mut stats = Self::empty(src_vocab.clone(), tgt_vocab.clone());
        let mut xs: Vec<TokenId> = Vec::new();
        let mut ys: Vec<TokenId> = Vec::new();
        for pair in pairs {
            for (side, len) in [
                (Side::Source, pair.source.len()),
                (Side::Target, pair.target.len()),
            ] {
                if len > max_sentence_len {
                    return Err(StatsError::SentenceTooLong {
                        index: pair.index,
                        side,
                        len,
                        max: max_sentence_len,
                    });
                }
            }
            xs.clear();
            xs.extend_from_slice(&pair.source);
            xs.sort_unstable();
            xs.dedup();
            ys.clear();
            ys.extend_from_slice(&pair.target);
            ys.sort_unstable();
            ys.dedup();
            for &x in &xs {
                stats.f_src[x as usize] += 1;
            }
            for &y in &ys {
                stats.f_tgt[y as usize] += 1;
            }
            for &x in &xs {
                let hi = u64::from(x) << 32;
                for &y in &ys {
                    *stats.f_pair.entry(hi | u64::from(y)).or_insert(0) += 1;
                }
            }
        }
        stats.k = pairs.len() as u64;
        Ok(stats)
    }

    /// Total number of sentence pairs counted.
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn source_count(&self, x: TokenId) -> u64 {
        self.f_src.get(x as usize).copied().unwrap_or(0)
    }

    pub fn target_count(&self, y: TokenId) -> u64 {
        self.f_tgt.get(y as usize).copied().unwrap_or(0)
    }

    pub fn pair_count(&self, x: TokenId, y: TokenId) -> u64 {
        self.f_pair.get(&pair_key(x, y)).copied().unwrap_or(0)
    }

    /// Number of distinct pairs actually observed.
    pub fn pair_entries(&self) -> usize {
        self.f_pair.len()
    }

    pub fn source_vocab(&self) -> &Vocab {
        &self.src_vocab
    }

    pub fn target_vocab(&self) -> &Vocab {
        &self.tgt_vocab
    }

    pub fn source_counts(&self) -> impl Iterator<Item = (TokenId, u64)> + '_ {
        nonzero(&self.f_src)
    }

    pub fn target_counts(&self) -> impl Iterator<Item = (TokenId, u64)> + '_ {
        nonzero(&self.f_tgt)
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((TokenId, TokenId), u64)> + '_ {
        self.f_pair.iter().map(|(&key, &c)| (split_key(key), c))
    }

    /// Element-wise sum of two shards counted over identical vocabularies.
    pub fn merge(&self, other: &Self) -> Result<Self, StatsError> {
        if self.src_vocab != other.src_vocab || self.tgt_vocab != other.tgt_vocab {
            return Err(StatsError::VocabMismatch);
        }
        let mut merged = self.clone();
        merged.merge_in_place(other);
        Ok(merged)
    }

    fn merge_in_place(&mut self, other: &Self) {
        self.k += other.k;
        for (a, b) in self.f_src.iter_mut().zip(&other.f_src) {
            *a += b;
        }
        for (a, b) in self.f_tgt.iter_mut().zip(&other.f_tgt) {
            *a += b;
        }
        for (&key, &c) in &other.f_pair {
            *self.f_pair.entry(key).or_insert(0) += c;
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("BMISTATS\t1\n");
        let _ = writeln!(out, "K\t{}", self.k);
        push_single_records(&mut out, 'S', &self.f_src, &self.src_vocab);
        push_single_records(&mut out, 'T', &self.f_tgt, &self.tgt_vocab);
        let mut rows: Vec<(&str, &str, u64)> = self
            .f_pair
            .iter()
            .map(|(&key, &c)| {
                let (x, y) = split_key(key);
                (
                    self.src_vocab.token(x).unwrap(),
                    self.tgt_vocab.token(y).unwrap(),
                    c,
                )
            })
            .collect();
        rows.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (s, t, c) in rows {
            let _ = writeln!(out, "P\t{s}\t{t}\t{c}");
        }
        out
    }

    /// Serializes deterministically: repeated writes of equal statistics are
    /// byte-identical.
    pub fn write_to(&self, path: &Path) -> Result<(), StatsError> {
        crate::util::write_atomic(path, self.render().as_bytes())?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self, StatsError> {
        let name = path.display().to_string();
        let bytes = std::fs::read(path)?;
        let text = String::from_utf8(bytes).map_err(|e| {
            let upto = e.utf8_error().valid_up_to();
            StatsError::Parse {
                path: name.clone(),
                line: e.as_bytes()[..upto].iter().filter(|&&b| b == b'\n').count() + 1,
                reason: "invalid utf-8".into(),
            }
        })?;
        parse_stats(&text, &name)
    }
}

fn nonzero(counts: &[u64]) -> impl Iterator<Item = (TokenId, u64)> + '_ {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i as TokenId, c))
}

fn push_single_records(out: &mut String, tag: char, counts: &[u64], vocab: &Vocab) {
    let mut rows: Vec<(&str, u64)> = nonzero(counts)
        .map(|(id, c)| (vocab.token(id).unwrap(), c))
        .collect();
    rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
    for (t, c) in rows {
        let _ = writeln!(out, "{tag}\t{t}\t{c}");
    }
}

/// Counts never carry leading zeros, so parsed files re-serialize
/// byte-identically.
fn parse_count(s: &str) -> Option<u64> {
    if s.is_empty() || (s.len() > 1 && s.starts_with('0')) {
        return None;
    }
    s.parse().ok()
}

fn parse_stats(text: &str, name: &str) -> Result<CooccurStats, StatsError> {
    let err = |line: usize, reason: &str| StatsError::Parse {
        path: name.to_string(),
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "BMISTATS\t1")) => {}
        Some((_, l)) if l.starts_with("BMISTATS\t") => {
            return Err(StatsError::Version {
                path: name.to_string(),
                found: l["BMISTATS\t".len()..].to_string(),
            })
        }
        _ => return Err(err(1, "expected stats header")),
    }
    let k = match lines.next() {
        Some((_, l)) => match l.strip_prefix("K\t").and_then(parse_count) {
            Some(k) => k,
            None => return Err(err(2, "expected pair count record")),
        },
        None => return Err(err(2, "expected pair count record")),
    };

    let mut stats = CooccurStats::empty(Vocab::new(), Vocab::new());
    stats.k = k;
    let mut section = 0usize; // 1 = S, 2 = T, 3 = P
    let mut prev_single: Option<String> = None;
    let mut prev_pair: Option<(String, String)> = None;

    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        let rank = match fields[0] {
            "S" => 1,
            "T" => 2,
            "P" => 3,
            _ => return Err(err(line_no, "unknown record tag")),
        };
        if rank < section {
            return Err(err(line_no, "records out of section order"));
        }
        if rank > section {
            section = rank;
            prev_single = None;
        }
        match rank {
            1 | 2 => {
                let [_, token, count] = fields.as_slice() else {
                    return Err(err(line_no, "expected tag, token, count"));
                };
                if token.is_empty() {
                    return Err(err(line_no, "empty token"));
                }
                let c = parse_count(count)
                    .ok_or_else(|| err(line_no, "malformed count"))?;
                if c == 0 || c > k {
                    return Err(err(line_no, "count outside [1, K]"));
                }
                if prev_single.as_deref() >= Some(*token) {
                    return Err(err(line_no, "tokens not in strictly ascending order"));
                }
                prev_single = Some(token.to_string());
                if rank == 1 {
                    stats.src_vocab.intern(token).expect("non-empty");
                    stats.f_src.push(c);
                } else {
                    stats.tgt_vocab.intern(token).expect("non-empty");
                    stats.f_tgt.push(c);
                }
            }
            _ => {
                let [_, src, tgt, count] = fields.as_slice() else {
                    return Err(err(line_no, "expected tag, source, target, count"));
                };
                let c = parse_count(count)
                    .ok_or_else(|| err(line_no, "malformed count"))?;
                let x = stats
                    .src_vocab
                    .id(src)
                    .ok_or_else(|| err(line_no, "unknown source token"))?;
                let y = stats
                    .tgt_vocab
                    .id(tgt)
                    .ok_or_else(|| err(line_no, "unknown target token"))?;
                if c == 0 || c > stats.f_src[x as usize].min(stats.f_tgt[y as usize]) {
                    return Err(err(line_no, "pair count exceeds its marginals"));
                }
                let this = (src.to_string(), tgt.to_string());
                if prev_pair.as_ref() >= Some(&this) {
                    return Err(err(line_no, "pairs not in strictly ascending order"));
                }
                prev_pair = Some(this);
                stats.f_pair.insert(pair_key(x, y), c);
            }
        }
    }
    Ok(stats)
}

/// Equality is semantic: identical totals and identical counts per token
/// string, regardless of id assignment order.
impl PartialEq for CooccurStats {
    fn eq(&self, other: &Self) -> bool {
        fn singles<'a>(counts: &'a [u64], vocab: &'a Vocab) -> BTreeMap<&'a str, u64> {
            nonzero(counts)
                .map(|(id, c)| (vocab.token(id).unwrap(), c))
                .collect()
        }
        fn by_string(stats: &CooccurStats) -> BTreeMap<(&str, &str), u64> {
            stats
                .pairs()
                .map(|((x, y), c)| {
                    (
                        (
                            stats.src_vocab.token(x).unwrap(),
                            stats.tgt_vocab.token(y).unwrap(),
                        ),
                        c,
                    )
                })
                .collect()
        }
        self.k == other.k
            && singles(&self.f_src, &self.src_vocab) == singles(&other.f_src, &other.src_vocab)
            && singles(&self.f_tgt, &self.tgt_vocab) == singles(&other.f_tgt, &other.tgt_vocab)
            && by_string(self) == by_string(other)
    }
}

impl Eq for CooccurStats {}

pub fn build_stats(corpus: &ParallelCorpus) -> Result<CooccurStats, StatsError> {
    build_stats_with(corpus, &BuildOptions::default())
}

/// Counts a whole corpus, sharding across threads when it is worth it. The
/// result is identical for every thread count: shards hold exact integer
/// counts and merging sums them.
pub fn build_stats_with(
    corpus: &ParallelCorpus,
    opts: &BuildOptions,
) -> Result<CooccurStats, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let pairs = corpus.pairs();
    let threads = match opts.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    if threads == 1 || pairs.len() < PARALLEL_THRESHOLD {
        return CooccurStats::from_pairs(
            pairs,
            corpus.source_vocab(),
            corpus.target_vocab(),
            opts.max_sentence_len,
        );
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| StatsError::Threads(e.to_string()))?;
    let chunk = pairs.len().div_ceil(threads);
    let shards: Result<Vec<CooccurStats>, StatsError> = pool.install(|| {
        pairs
            .par_chunks(chunk)
            .map(|shard| {
                CooccurStats::from_pairs(
                    shard,
                    corpus.source_vocab(),
                    corpus.target_vocab(),
                    opts.max_sentence_len,
                )
            })
            .collect()
    });
    let mut shards = shards?.into_iter();
    let mut acc = shards.next().expect("non-empty corpus");
    for shard in shards {
        acc.merge_in_place(&shard);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_parallel_corpus;
    use proptest::prelude::*;

    fn corpus_from(lines: &[(&str, &str)]) -> ParallelCorpus {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("s");
        let tgt = dir.path().join("t");
        let sources: String = lines.iter().map(|p| p.0.to_string() + "\n").collect();
        let targets: String = lines.iter().map(|p| p.1.to_string() + "\n").collect();
        std::fs::write(&src, sources).unwrap();
        std::fs::write(&tgt, targets).unwrap();
        load_parallel_corpus(&src, &tgt).unwrap()
    }

    fn id(vocab: &Vocab, t: &str) -> TokenId {
        vocab.id(t).unwrap()
    }

    #[test]
    fn counts_the_three_pair_example() {
        let corpus = corpus_from(&[("a b", "U V"), ("b", "V"), ("a", "U")]);
        let stats = build_stats(&corpus).unwrap();
        let (sv, tv) = (corpus.source_vocab(), corpus.target_vocab());
        assert_eq!(stats.k(), 3);
        assert_eq!(stats.source_count(id(sv, "a")), 2);
        assert_eq!(stats.source_count(id(sv, "b")), 2);
        assert_eq!(stats.target_count(id(tv, "U")), 2);
        assert_eq!(stats.target_count(id(tv, "V")), 2);
        assert_eq!(stats.pair_count(id(sv, "a"), id(tv, "U")), 2);
        assert_eq!(stats.pair_count(id(sv, "b"), id(tv, "U")), 1);
        assert_eq!(stats.pair_count(id(sv, "a"), id(tv, "V")), 1);
        assert_eq!(stats.pair_count(id(sv, "b"), id(tv, "V")), 2);
        assert_eq!(stats.pair_entries(), 4);
    }

    #[test]
    fn repeats_in_one_sentence_count_once() {
        let corpus = corpus_from(&[("a a b", "U U")]);
        let stats = build_stats(&corpus).unwrap();
        let (sv, tv) = (corpus.source_vocab(), corpus.target_vocab());
        assert_eq!(stats.source_count(id(sv, "a")), 1);
        assert_eq!(stats.target_count(id(tv, "U")), 1);
        assert_eq!(stats.pair_count(id(sv, "a"), id(tv, "U")), 1);
        assert_eq!(stats.pair_count(id(sv, "b"), id(tv, "U")), 1);
        assert_eq!(stats.pair_entries(), 2);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let corpus = ParallelCorpus::new(Vocab::new(), Vocab::new(), vec![]);
        assert!(matches!(build_stats(&corpus), Err(StatsError::EmptyCorpus)));
    }

    #[test]
    fn oversized_sentence_is_rejected_with_its_index() {
        let corpus = corpus_from(&[("a", "U"), ("a b c d e", "U")]);
        let opts = BuildOptions {
            max_sentence_len: 4,
            threads: 1,
        };
        match build_stats_with(&corpus, &opts) {
            Err(StatsError::SentenceTooLong {
                index: 1,
                side: Side::Source,
                len: 5,
                max: 4,
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn merging_an_empty_shard_is_identity() {
        let corpus = corpus_from(&[("a b", "U"), ("b", "V")]);
        let stats = build_stats(&corpus).unwrap();
        let empty = CooccurStats::empty(
            corpus.source_vocab().clone(),
            corpus.target_vocab().clone(),
        );
        assert_eq!(stats.merge(&empty).unwrap(), stats);
        assert_eq!(empty.merge(&stats).unwrap(), stats);
    }

    #[test]
    fn merge_requires_identical_vocabularies() {
        let one = build_stats(&corpus_from(&[("a", "U")])).unwrap();
        let two = build_stats(&corpus_from(&[("b", "U")])).unwrap();
        assert!(matches!(one.merge(&two), Err(StatsError::VocabMismatch)));
    }

    #[test]
    fn sharded_counting_matches_serial() {
        let lines: Vec<(String, String)> = (0..5000)
            .map(|i| (format!("w{} w{}", i % 7, i % 3), format!("v{}", i % 5)))
            .collect();
        let refs: Vec<(&str, &str)> = lines
            .iter()
            .map(|(s, t)| (s.as_str(), t.as_str()))
            .collect();
        let corpus = corpus_from(&refs);
        let serial = build_stats_with(
            &corpus,
            &BuildOptions {
                threads: 1,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        let parallel = build_stats_with(
            &corpus,
            &BuildOptions {
                threads: 3,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.k(), 5000);
    }

    #[test]
    fn round_trips_through_the_stats_file() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = corpus_from(&[("a b", "U V"), ("b", "V"), ("a", "U")]);
        let stats = build_stats(&corpus).unwrap();
        let path = dir.path().join("c.stats");
        stats.write_to(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "BMISTATS\t1\nK\t3\nS\ta\t2\nS\tb\t2\nT\tU\t2\nT\tV\t2\n\
             P\ta\tU\t2\nP\ta\tV\t1\nP\tb\tU\t1\nP\tb\tV\t2\n"
        );
        let reread = CooccurStats::read_from(&path).unwrap();
        assert_eq!(reread, stats);
        assert_eq!(reread.k(), 3);
        assert_eq!(
            reread.pair_count(
                reread.source_vocab().id("b").unwrap(),
                reread.target_vocab().id("V").unwrap()
            ),
            2
        );
    }

    fn parse_err(contents: &str) -> StatsError {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.stats");
        std::fs::write(&path, contents).unwrap();
        CooccurStats::read_from(&path).unwrap_err()
    }

    #[test]
    fn rejects_other_versions() {
        match parse_err("BMISTATS\t2\nK\t0\n") {
            StatsError::Version { found, .. } => assert_eq!(found, "2"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_records_with_line_numbers() {
        for (contents, line) in [
            ("nonsense\n", 1),
            ("BMISTATS\t1\nK\t-3\n", 2),
            ("BMISTATS\t1\nK\t1\nS\ta\n", 3),
            ("BMISTATS\t1\nK\t1\nS\ta\t1\nS\ta\t1\n", 4),
            ("BMISTATS\t1\nK\t1\nS\tb\t1\nS\ta\t1\n", 4),
            ("BMISTATS\t1\nK\t1\nS\ta\t2\n", 3),
            ("BMISTATS\t1\nK\t1\nS\ta\t01\n", 3),
            ("BMISTATS\t1\nK\t1\nT\tU\t1\nS\ta\t1\n", 4),
            ("BMISTATS\t1\nK\t1\nS\ta\t1\nT\tU\t1\nP\ta\tX\t1\n", 5),
            ("BMISTATS\t1\nK\t2\nS\ta\t1\nT\tU\t2\nP\ta\tU\t2\n", 5),
        ] {
            match parse_err(contents) {
                StatsError::Parse { line: l, .. } => {
                    assert_eq!(l, line, "wrong line for {contents:?}")
                }
                other => panic!("unexpected for {contents:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn pair_table_stays_proportional_to_distinct_pairs() {
        // 60 sentences, all built from the same two tokens per side.
        let lines: Vec<(String, String)> = (0..60)
            .map(|i| {
                if i % 2 == 0 {
                    ("a b".to_string(), "U".to_string())
                } else {
                    ("b a".to_string(), "V U".to_string())
                }
            })
            .collect();
        let refs: Vec<(&str, &str)> = lines
            .iter()
            .map(|(s, t)| (s.as_str(), t.as_str()))
            .collect();
        let stats = build_stats(&corpus_from(&refs)).unwrap();
        assert_eq!(stats.k(), 60);
        assert_eq!(stats.pair_entries(), 4);
    }

    proptest! {
        /// Concatenating a corpus with itself exactly doubles every count.
        #[test]
        fn self_concatenation_doubles_counts(
            lines in proptest::collection::vec(
                ("[ab c]{1,9}", "[UV W]{1,9}"),
                1..12,
            )
        ) {
            let cleaned: Vec<(String, String)> = lines
                .iter()
                .filter(|(s, t)| {
                    s.split(' ').any(|x| !x.is_empty()) && t.split(' ').any(|x| !x.is_empty())
                })
                .cloned()
                .collect();
            prop_assume!(!cleaned.is_empty());
            let refs: Vec<(&str, &str)> = cleaned
                .iter()
                .map(|(s, t)| (s.as_str(), t.as_str()))
                .collect();
            let mut doubled = refs.clone();
            doubled.extend(refs.iter().copied());
            let one = build_stats(&corpus_from(&refs)).unwrap();
            let two = build_stats(&corpus_from(&doubled)).unwrap();
            prop_assert_eq!(two.k(), 2 * one.k());
            for (x, c) in one.source_counts() {
                let tok = one.source_vocab().token(x).unwrap();
                let x2 = two.source_vocab().id(tok).unwrap();
                prop_assert_eq!(two.source_count(x2), 2 * c);
            }
            for ((x, y), c) in one.pairs() {
                let xs = one.source_vocab().token(x).unwrap();
                let yt = one.target_vocab().token(y).unwrap();
                let x2 = two.source_vocab().id(xs).unwrap();
                let y2 = two.target_vocab().id(yt).unwrap();
                prop_assert_eq!(two.pair_count(x2, y2), 2 * c);
            }
        }

        /// Every pair count is bounded by both of its marginals, and every
        /// marginal by the corpus size.
        #[test]
        fn counts_respect_their_bounds(
            lines in proptest::collection::vec(
                ("[abcd ]{1,12}", "[UVWX ]{1,12}"),
                1..15,
            )
        ) {
            let cleaned: Vec<(String, String)> = lines
                .iter()
                .filter(|(s, t)| {
                    s.split(' ').any(|x| !x.is_empty()) && t.split(' ').any(|x| !x.is_empty())
                })
                .cloned()
                .collect();
            prop_assume!(!cleaned.is_empty());
            let refs: Vec<(&str, &str)> = cleaned
                .iter()
                .map(|(s, t)| (s.as_str(), t.as_str()))
                .collect();
            let stats = build_stats(&corpus_from(&refs)).unwrap();
            for (_, c) in stats.source_counts() {
                prop_assert!(c >= 1 && c <= stats.k());
            }
            for (_, c) in stats.target_counts() {
                prop_assert!(c >= 1 && c <= stats.k());
            }
            for ((x, y), c) in stats.pairs() {
                prop_assert!(c <= stats.source_count(x).min(stats.target_count(y)));
            }
        }
    }
}
