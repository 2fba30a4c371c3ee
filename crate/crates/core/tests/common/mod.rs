//! Shared test oracles. Everything here recounts from raw string data and
//! stays independent of the library's own counting and scoring paths.

#![allow(dead_code)]

use bmikit::corpus::{ParallelCorpus, SentencePair, Vocab};
use rand::Rng;

/// A sentence pair as raw tokens, before any interning.
pub type RawPair = (Vec<String>, Vec<String>);

pub fn random_corpus<R: Rng>(
    rng: &mut R,
    max_pairs: usize,
    vocab_per_side: usize,
    max_len: usize,
) -> Vec<RawPair> {
    let k = rng.random_range(1..=max_pairs);
    (0..k)
        .map(|_| {
            let n = rng.random_range(1..=max_len);
            let m = rng.random_range(1..=max_len);
            let src = (0..n)
                .map(|_| format!("s{}", rng.random_range(0..vocab_per_side)))
                .collect();
            let tgt = (0..m)
                .map(|_| format!("t{}", rng.random_range(0..vocab_per_side)))
                .collect();
            (src, tgt)
        })
        .collect()
}

/// Interns a raw corpus through the public constructors, in corpus order.
pub fn intern_corpus(raw: &[RawPair]) -> ParallelCorpus {
    let mut src_vocab = Vocab::new();
    let mut tgt_vocab = Vocab::new();
    let pairs = raw
        .iter()
        .enumerate()
        .map(|(i, (src, tgt))| {
            let s = src.iter().map(|t| src_vocab.intern(t).unwrap()).collect();
            let t = tgt.iter().map(|t| tgt_vocab.intern(t).unwrap()).collect();
            SentencePair::new(i, s, t).unwrap()
        })
        .collect();
    ParallelCorpus::new(src_vocab, tgt_vocab, pairs)
}

/// Writes a raw corpus as two aligned line files.
pub fn write_corpus(
    dir: &std::path::Path,
    raw: &[RawPair],
) -> (std::path::PathBuf, std::path::PathBuf) {
    let src_path = dir.join("src.txt");
    let tgt_path = dir.join("tgt.txt");
    let join = |side: fn(&RawPair) -> &Vec<String>| {
        raw.iter()
            .map(|p| side(p).join(" ") + "\n")
            .collect::<String>()
    };
    std::fs::write(&src_path, join(|p| &p.0)).unwrap();
    std::fs::write(&tgt_path, join(|p| &p.1)).unwrap();
    (src_path, tgt_path)
}

fn sentence_has(sentence: &[String], tok: &str) -> bool {
    sentence.iter().any(|t| t == tok)
}

/// Document frequency of a source token, recounted by scanning every pair.
pub fn oracle_src_freq(raw: &[RawPair], x: &str) -> u64 {
    raw.iter().filter(|(s, _)| sentence_has(s, x)).count() as u64
}

pub fn oracle_tgt_freq(raw: &[RawPair], y: &str) -> u64 {
    raw.iter().filter(|(_, t)| sentence_has(t, y)).count() as u64
}

pub fn oracle_pair_freq(raw: &[RawPair], x: &str, y: &str) -> u64 {
    raw.iter()
        .filter(|(s, t)| sentence_has(s, x) && sentence_has(t, y))
        .count() as u64
}

/// Summand for one (source token, target token) pair; zero co-occurrence
/// contributes nothing.
pub fn oracle_pmi(raw: &[RawPair], x: &str, y: &str) -> f64 {
    let c = oracle_pair_freq(raw, x, y);
    if c == 0 {
        return 0.0;
    }
    let a = oracle_src_freq(raw, x) as f64;
    let b = oracle_tgt_freq(raw, y) as f64;
    (c as f64 * raw.len() as f64 / (a * b)).ln()
}

/// Sentence-level score of a target token: sum over the distinct source
/// tokens of the sentence, in sorted-token order.
pub fn oracle_score_token(raw: &[RawPair], src_sentence: &[String], y: &str) -> f64 {
    let mut distinct: Vec<&String> = src_sentence.iter().collect();
    distinct.sort();
    distinct.dedup();
    distinct.iter().map(|x| oracle_pmi(raw, x, y)).sum()
}

/// Monte-Carlo estimate of the expected fraction of types covered by a
/// without-replacement sample, with its standard error. Token ids must be
/// below 128 so a bitmask can count distinct types per draw.
pub fn mc_hdd<R: Rng>(
    stream: &[u32],
    sample_size: usize,
    draws: usize,
    rng: &mut R,
) -> (f64, f64) {
    let n = stream.len();
    assert!(sample_size >= 1 && sample_size <= n && draws >= 2);
    assert!(stream.iter().all(|&t| t < 128));
    let mut idx: Vec<usize> = (0..n).collect();
    // Welford's running mean/variance: naive sums drift by ~1e-12 over a
    // million draws, which is above the comparison slack when every draw
    // is identical and the standard error is exactly zero.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=draws {
        for i in 0..sample_size {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        let mut mask: u128 = 0;
        for &pos in &idx[..sample_size] {
            mask |= 1u128 << stream[pos];
        }
        let x = mask.count_ones() as f64 / sample_size as f64;
        let delta = x - mean;
        mean += delta / k as f64;
        m2 += delta * (x - mean);
    }
    let var = (m2 / (draws - 1) as f64).max(0.0);
    (mean, (var / draws as f64).sqrt())
}
