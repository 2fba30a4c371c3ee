//! Lexical diversity metrics over a token stream: plain and windowed
//! type-token ratios, a factor-based length-corrected ratio, and the
//! hypergeometric expectation of sample coverage.
//!
//! The hypergeometric metric is evaluated as an exact big-integer rational
//! and converted to f64 once at the end, so degenerate streams hit their
//! closed-form values exactly (an all-distinct stream is exactly 1).

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub const DEFAULT_MATTR_WINDOW: usize = 50;
pub const DEFAULT_HDD_SAMPLE: usize = 42;
pub const DEFAULT_MTLD_THRESHOLD: f64 = 0.72;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LexdivError {
    #[error("token stream is empty")]
    EmptyStream,
    #[error("window {window} outside [1, {len}]")]
    WindowOutOfRange { window: usize, len: usize },
    #[error("sample size {sample} exceeds the {len} available tokens")]
    SampleTooLarge { sample: usize, len: usize },
    #[error("sample size must be at least 1")]
    ZeroSample,
    #[error("threshold {0} outside (0, 1)")]
    ThresholdOutOfRange(f64),
    #[error("undefined on this stream: no factor ever completes")]
    Undefined,
}

/// Distinct types over total tokens.
pub fn ttr(stream: &[u32]) -> Result<f64, LexdivError> {
    if stream.is_empty() {
        return Err(LexdivError::EmptyStream);
    }
    let distinct = stream.iter().collect::<HashSet<_>>().len();
    Ok(distinct as f64 / stream.len() as f64)
}

/// Mean type-token ratio over every length-`window` substring, computed with
/// a rolling count. With the window spanning the whole stream this equals
/// [`ttr`] exactly.
pub fn mattr(stream: &[u32], window: usize) -> Result<f64, LexdivError> {
    if stream.is_empty() {
        return Err(LexdivError::EmptyStream);
    }
    if window == 0 || window > stream.len() {
        return Err(LexdivError::WindowOutOfRange {
            window,
            len: stream.len(),
        });
    }
    let mut counts: HashMap<u32, usize> = HashMap::new();
    let mut distinct = 0usize;
    for &t in &stream[..window] {
        let c = counts.entry(t).or_insert(0);
        if *c == 0 {
            distinct += 1;
        }
        *c += 1;
    }
    let w = window as f64;
    let mut sum = distinct as f64 / w;
    for i in window..stream.len() {
        let incoming = counts.entry(stream[i]).or_insert(0);
        if *incoming == 0 {
            distinct += 1;
        }
        *incoming += 1;
        let outgoing = counts.get_mut(&stream[i - window]).expect("in window");
        *outgoing -= 1;
        if *outgoing == 0 {
            distinct -= 1;
        }
        sum += distinct as f64 / w;
    }
    Ok(sum / (stream.len() - window + 1) as f64)
}

fn mtld_factors(stream: impl Iterator<Item = u32>, threshold: f64) -> f64 {
    let mut factors = 0.0f64;
    let mut seen: HashSet<u32> = HashSet::new();
    let mut tokens = 0usize;
    for t in stream {
        tokens += 1;
        seen.insert(t);
        let ratio = seen.len() as f64 / tokens as f64;
        if ratio <= threshold {
            factors += 1.0;
            seen.clear();
            tokens = 0;
        }
    }
    // A partial factor for the leftover tokens; an empty remainder adds
    // nothing.
    if tokens > 0 {
        let ratio = seen.len() as f64 / tokens as f64;
        factors += (1.0 - ratio) / (1.0 - threshold);
    }
    factors
}

/// Stream length over the mean number of factors, where a factor is a
/// maximal prefix whose running type-token ratio stays above the threshold.
/// Averaged over the forward and reversed stream. Errors with `Undefined`
/// when a direction never accumulates any factor mass.
pub fn mtld(stream: &[u32], threshold: f64) -> Result<f64, LexdivError> {
    if stream.is_empty() {
        return Err(LexdivError::EmptyStream);
    }
    if !(threshold.is_finite() && threshold > 0.0 && threshold < 1.0) {
        return Err(LexdivError::ThresholdOutOfRange(threshold));
    }
    let fwd = mtld_factors(stream.iter().copied(), threshold);
    let rev = mtld_factors(stream.iter().rev().copied(), threshold);
    if fwd == 0.0 || rev == 0.0 {
        return Err(LexdivError::Undefined);
    }
    let n = stream.len() as f64;
    Ok((n / fwd + n / rev) / 2.0)
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut res = BigUint::one();
    for i in 1..=k as u64 {
        res = res * (n as u64 - k as u64 + i) / i;
    }
    res
}

/// Expected proportion of types covered by a uniform random draw of `sample`
/// tokens without replacement: the mean, over types, of the probability that
/// the type lands in the sample, divided by the sample size.
pub fn hdd(stream: &[u32], sample: usize) -> Result<f64, LexdivError> {
    if stream.is_empty() {
        return Err(LexdivError::EmptyStream);
    }
    if sample == 0 {
        return Err(LexdivError::ZeroSample);
    }
    let n = stream.len();
    if sample > n {
        return Err(LexdivError::SampleTooLarge { sample, len: n });
    }
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for &t in stream {
        *counts.entry(t).or_insert(0) += 1;
    }
    let total = binomial(n, sample);
    let mut misses: HashMap<usize, BigUint> = HashMap::new();
    let mut num = BigUint::zero();
    for &c in counts.values() {
        let miss = misses
            .entry(c)
            .or_insert_with(|| binomial(n - c, sample));
        num += &total - &*miss;
    }
    let den = &total * sample as u64;
    // One rounding only: scale the exact ratio by 2^64, floor-divide, convert.
    let q = (num << 64u32) / den;
    Ok(q.to_f64().expect("fits") * 2f64.powi(-64))
}

/// One metric evaluation, ready for line-oriented output.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    pub metric: String,
    pub value: f64,
    /// Parameter name/value pairs, already rendered.
    pub params: Vec<(String, String)>,
    /// Stream length the metric was computed over.
    pub n: usize,
}

impl DiversityReport {
    /// `metric=<name> value=<float> params=<k:v,...> N=<len>`, one line.
    pub fn render(&self) -> String {
        let params = if self.params.is_empty() {
            "-".to_string()
        } else {
            self.params
                .iter()
                .map(|(k, v)| format!("{k}:{v}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "metric={} value={:.6} params={} N={}",
            self.metric, self.value, params, self.n
        )
    }
}
