//! Parallel corpus loading and token interning.
//!
//! Lines are aligned one-to-one between a source and a target file, tokens
//! are separated by single ASCII spaces, and every token is interned into a
//! dense per-side id space in first-occurrence order.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: invalid utf-8 at byte {offset}")]
    Encoding { path: String, offset: usize },
    #[error("{side} line {line} is empty")]
    EmptyLine { side: Side, line: usize },
    #[error("{side} line {line}: token contains a tab")]
    TabInToken { side: Side, line: usize },
    #[error("cannot intern an empty token")]
    EmptyToken,
    #[error("line count mismatch: {source_lines} source lines vs {target_lines} target lines")]
    LineCountMismatch {
        source_lines: usize,
        target_lines: usize,
    },
}

/// Dense string-to-id table. Ids are assigned in first-intern order, so two
/// identical inputs always produce identical ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    ids: HashMap<String, TokenId>,
    tokens: Vec<String>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Returns the existing id for the token or assigns the next one.
    pub fn intern(&mut self, token: &str) -> Result<TokenId, CorpusError> {
        if token.is_empty() {
            return Err(CorpusError::EmptyToken);
        }
        if let Some(&id) = self.ids.get(token) {
            return Ok(id);
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        Ok(id)
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub index: usize,
    pub source: Vec<TokenId>,
    pub target: Vec<TokenId>,
}

impl SentencePair {
    /// Both sides must be non-empty.
    pub fn new(
        index: usize,
        source: Vec<TokenId>,
        target: Vec<TokenId>,
    ) -> Result<Self, CorpusError> {
        if source.is_empty() {
            return Err(CorpusError::EmptyLine {
                side: Side::Source,
                line: index + 1,
            });
        }
        if target.is_empty() {
            return Err(CorpusError::EmptyLine {
                side: Side::Target,
                line: index + 1,
            });
        }
        Ok(Self {
            index,
            source,
            target,
        })
    }
}

/// An aligned corpus together with the vocabularies its ids live in. The
/// source and target sides always keep separate vocabularies.
#[derive(Debug, Clone)]
pub struct ParallelCorpus {
    source_vocab: Vocab,
    target_vocab: Vocab,
    pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    /// The pairs must be interned against the supplied vocabularies.
    pub fn new(source_vocab: Vocab, target_vocab: Vocab, pairs: Vec<SentencePair>) -> Self {
        Self {
            source_vocab,
            target_vocab,
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn source_vocab(&self) -> &Vocab {
        &self.source_vocab
    }

    pub fn target_vocab(&self) -> &Vocab {
        &self.target_vocab
    }
}

pub fn load_parallel_corpus(
    source_path: &Path,
    target_path: &Path,
) -> Result<ParallelCorpus, CorpusError> {
    load_parallel_corpus_seeded(source_path, target_path, Vocab::new(), Vocab::new())
}

/// Loads a corpus on top of existing vocabularies. Seeding keeps ids stable
/// when a corpus is scored against previously built statistics; new tokens
/// extend the id space.
pub fn load_parallel_corpus_seeded(
    source_path: &Path,
    target_path: &Path,
    mut source_vocab: Vocab,
    mut target_vocab: Vocab,
) -> Result<ParallelCorpus, CorpusError> {
    let source_lines = read_lines(source_path)?;
    let target_lines = read_lines(target_path)?;
    if source_lines.len() != target_lines.len() {
        return Err(CorpusError::LineCountMismatch {
            source_lines: source_lines.len(),
            target_lines: target_lines.len(),
        });
    }
    let mut pairs = Vec::with_capacity(source_lines.len());
    for (i, (src, tgt)) in source_lines.iter().zip(&target_lines).enumerate() {
        let source = parse_line(src, i, Side::Source, &mut source_vocab)?;
        let target = parse_line(tgt, i, Side::Target, &mut target_vocab)?;
        pairs.push(SentencePair {
            index: i,
            source,
            target,
        });
    }
    Ok(ParallelCorpus {
        source_vocab,
        target_vocab,
        pairs,
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| CorpusError::Encoding {
        path: path.display().to_string(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_line(
    line: &str,
    index: usize,
    side: Side,
    vocab: &mut Vocab,
) -> Result<Vec<TokenId>, CorpusError> {
    let mut ids = Vec::new();
    // Trailing whitespace is stripped and runs of spaces collapse; tokens
    // must stay tab-free so they survive the tab-separated stats format.
    for token in line.trim_end().split(' ').filter(|t| !t.is_empty()) {
        if token.contains('\t') {
            return Err(CorpusError::TabInToken {
                side,
                line: index + 1,
            });
        }
        ids.push(vocab.intern(token)?);
    }
    if ids.is_empty() {
        return Err(CorpusError::EmptyLine {
            side,
            line: index + 1,
        });
    }
    Ok(ids)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlignmentViolation {
    EmptyLine { side: Side, line: usize },
    LineCountMismatch {
        source_lines: usize,
        target_lines: usize,
    },
}

impl fmt::Display for AlignmentViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlignmentViolation::EmptyLine { side, line } => {
                write!(f, "{side} line {line} is empty")
            }
            AlignmentViolation::LineCountMismatch {
                source_lines,
                target_lines,
            } => write!(
                f,
                "line count mismatch: {source_lines} source vs {target_lines} target"
            ),
        }
    }
}

/// Structural summary of a file pair. All violations are collected rather
/// than stopping at the first.
#[derive(Debug, Clone, Default)]
pub struct AlignmentReport {
    pub pairs: usize,
    pub max_source_len: usize,
    pub max_target_len: usize,
    pub violations: Vec<AlignmentViolation>,
}

impl AlignmentReport {
    pub fn is_aligned(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_alignment(
    source_path: &Path,
    target_path: &Path,
) -> Result<AlignmentReport, CorpusError> {
    let source_lines = read_lines(source_path)?;
    let target_lines = read_lines(target_path)?;
    let mut report = AlignmentReport {
        pairs: source_lines.len().min(target_lines.len()),
        ..AlignmentReport::default()
    };
    if source_lines.len() != target_lines.len() {
        report.violations.push(AlignmentViolation::LineCountMismatch {
            source_lines: source_lines.len(),
            target_lines: target_lines.len(),
        });
    }
    let mut scan = |lines: &[String], side: Side, max_len: &mut usize| {
        for (i, line) in lines.iter().enumerate() {
            let count = line.trim_end().split(' ').filter(|t| !t.is_empty()).count();
            if count == 0 {
                report
                    .violations
                    .push(AlignmentViolation::EmptyLine { side, line: i + 1 });
            }
            *max_len = (*max_len).max(count);
        }
    };
    let mut max_src = 0;
    let mut max_tgt = 0;
    scan(&source_lines, Side::Source, &mut max_src);
    scan(&target_lines, Side::Target, &mut max_tgt);
    report.max_source_len = max_src;
    report.max_target_len = max_tgt;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &std::path::Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn interning_is_stable_and_dense() {
        let mut vocab = Vocab::new();
        assert_eq!(vocab.intern("a").unwrap(), 0);
        assert_eq!(vocab.intern("b").unwrap(), 1);
        assert_eq!(vocab.intern("a").unwrap(), 0);
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.token(1), Some("b"));
        assert_eq!(vocab.id("b"), Some(1));
        assert_eq!(vocab.id("c"), None);
    }

    #[test]
    fn empty_token_is_rejected() {
        let mut vocab = Vocab::new();
        assert!(matches!(vocab.intern(""), Err(CorpusError::EmptyToken)));
    }

    #[test]
    fn loads_aligned_files() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a b\nb c\n");
        let tgt = write(dir.path(), "t", "U\nV W\n");
        let corpus = load_parallel_corpus(&src, &tgt).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.pairs()[0].source, vec![0, 1]);
        assert_eq!(corpus.pairs()[1].source, vec![1, 2]);
        assert_eq!(corpus.pairs()[1].target, vec![1, 2]);
        assert_eq!(corpus.source_vocab().token(2), Some("c"));
    }

    #[test]
    fn repeated_spaces_and_trailing_whitespace_normalize() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a  b \n");
        let tgt = write(dir.path(), "t", "U\n");
        let corpus = load_parallel_corpus(&src, &tgt).unwrap();
        assert_eq!(corpus.pairs()[0].source, vec![0, 1]);
    }

    #[test]
    fn line_count_mismatch_names_both_counts() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a\nb\n");
        let tgt = write(dir.path(), "t", "U\n");
        match load_parallel_corpus(&src, &tgt) {
            Err(CorpusError::LineCountMismatch {
                source_lines: 2,
                target_lines: 1,
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn empty_line_is_an_error_with_its_position() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a\n\nb\n");
        let tgt = write(dir.path(), "t", "U\nV\nW\n");
        match load_parallel_corpus(&src, &tgt) {
            Err(CorpusError::EmptyLine {
                side: Side::Source,
                line: 2,
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn invalid_utf8_reports_byte_offset() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("s");
        std::fs::write(&src, b"ab\xff\n").unwrap();
        let tgt = write(dir.path(), "t", "U\n");
        match load_parallel_corpus(&src, &tgt) {
            Err(CorpusError::Encoding { offset: 2, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn tab_inside_token_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a\tb c\n");
        let tgt = write(dir.path(), "t", "U\n");
        match load_parallel_corpus(&src, &tgt) {
            Err(CorpusError::TabInToken {
                side: Side::Source,
                line: 1,
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn seeded_load_extends_the_given_vocab() {
        let mut seed = Vocab::new();
        seed.intern("b").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a b\n");
        let tgt = write(dir.path(), "t", "U\n");
        let corpus = load_parallel_corpus_seeded(&src, &tgt, seed, Vocab::new()).unwrap();
        // "b" keeps its seeded id, "a" is appended after it.
        assert_eq!(corpus.pairs()[0].source, vec![1, 0]);
    }

    #[test]
    fn validation_collects_every_violation() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a b c\n\nd\n");
        let tgt = write(dir.path(), "t", "U\n\n");
        let report = validate_alignment(&src, &tgt).unwrap();
        assert!(!report.is_aligned());
        assert_eq!(report.pairs, 2);
        assert_eq!(report.max_source_len, 3);
        assert_eq!(report.max_target_len, 1);
        assert_eq!(report.violations.len(), 3);
        assert!(report.violations.contains(&AlignmentViolation::LineCountMismatch {
            source_lines: 3,
            target_lines: 2,
        }));
        assert!(report.violations.contains(&AlignmentViolation::EmptyLine {
            side: Side::Source,
            line: 2,
        }));
        assert!(report.violations.contains(&AlignmentViolation::EmptyLine {
            side: Side::Target,
            line: 2,
        }));
    }

    #[test]
    fn aligned_files_validate_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s", "a b\nc\n");
        let tgt = write(dir.path(), "t", "U\nV W\n");
        let report = validate_alignment(&src, &tgt).unwrap();
        assert!(report.is_aligned());
        assert_eq!(report.pairs, 2);
        assert_eq!(report.max_target_len, 2);
    }

    proptest! {
        /// Writing the interned tokens back out, one space between tokens,
        /// reproduces the normalized input bytes.
        #[test]
        fn round_trips_normalized_input(
            lines in proptest::collection::vec(
                proptest::collection::vec("[a-z]{1,4}", 1..6),
                1..8,
            )
        ) {
            let dir = tempfile::tempdir().unwrap();
            let text: String = lines.iter().map(|l| l.join(" ") + "\n").collect();
            let src = write(dir.path(), "s", &text);
            let tgt_text: String = lines.iter().map(|_| "U\n".to_string()).collect();
            let tgt = write(dir.path(), "t", &tgt_text);
            let corpus = load_parallel_corpus(&src, &tgt).unwrap();
            let rebuilt: String = corpus
                .pairs()
                .iter()
                .map(|p| {
                    let toks: Vec<&str> = p
                        .source
                        .iter()
                        .map(|&id| corpus.source_vocab().token(id).unwrap())
                        .collect();
                    toks.join(" ") + "\n"
                })
                .collect();
            prop_assert_eq!(rebuilt, text);
        }

        /// Identical inputs produce identical id assignments.
        #[test]
        fn ids_are_deterministic(
            lines in proptest::collection::vec(
                proptest::collection::vec("[a-z]{1,3}", 1..5),
                1..6,
            )
        ) {
            let dir = tempfile::tempdir().unwrap();
            let text: String = lines.iter().map(|l| l.join(" ") + "\n").collect();
            let src = write(dir.path(), "s", &text);
            let tgt_text: String = lines.iter().map(|_| "U\n".to_string()).collect();
            let tgt = write(dir.path(), "t", &tgt_text);
            let one = load_parallel_corpus(&src, &tgt).unwrap();
            let two = load_parallel_corpus(&src, &tgt).unwrap();
            for (a, b) in one.pairs().iter().zip(two.pairs()) {
                prop_assert_eq!(&a.source, &b.source);
            }
            prop_assert_eq!(one.source_vocab().len(), two.source_vocab().len());
        }
    }
}
