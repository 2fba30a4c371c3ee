//! Python bindings: statistics building and queries, sentence scoring,
//! weight emission, diversity metrics and mapping reports. Paths come in as
//! strings, tokens as lists of strings; validation failures raise ValueError.

use std::collections::HashMap;
use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bmikit::bmi::{
    self, weight_bmi, weight_chisquare, weight_exponential, ScoreOptions, WeightSchedule,
    ZeroPolicy,
};
use bmikit::cooccur::{build_stats_with, BuildOptions, CooccurStats};
use bmikit::corpus::{load_parallel_corpus, load_parallel_corpus_seeded, TokenId};
use bmikit::lexdiv;
use bmikit::loss::{train_toy_model, TrainOptions};
use bmikit::{analysis, ParallelCorpus};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// (sizes, labels, per-bucket score ranges).
type BucketTuple = (Vec<usize>, Vec<usize>, Vec<(f64, f64)>);
/// ((source, count, pmi, share) entries, target count, concentration).
type MappingTuple = (Vec<(String, u64, f64, f64)>, u64, f64);

fn score_options(per_occurrence: bool, floor: Option<u64>) -> ScoreOptions {
    ScoreOptions {
        zero_policy: match floor {
            Some(f) => ZeroPolicy::Floor(f),
            None => ZeroPolicy::Skip,
        },
        dedup_source: !per_occurrence,
    }
}

fn schedule_from(
    schedule: &str,
    scale: f64,
    base: f64,
    threshold: f64,
    amplitude: f64,
    decay: f64,
) -> PyResult<WeightSchedule> {
    let schedule = match schedule {
        "bmi" => WeightSchedule::Bmi {
            scale,
            base,
            threshold,
        },
        "exp" => WeightSchedule::Exponential { amplitude, decay },
        "chi2" => WeightSchedule::ChiSquare { amplitude, decay },
        other => {
            return Err(value_err(format!(
                "unknown schedule {other:?}, expected bmi, exp or chi2"
            )))
        }
    };
    schedule.validate().map_err(value_err)?;
    Ok(schedule)
}

/// Maps tokens onto the statistics' id space; unknown tokens get fresh,
/// mutually distinct ids and therefore score zero.
fn source_ids(stats: &CooccurStats, tokens: &[String]) -> Vec<TokenId> {
    let n = stats.source_vocab().len() as TokenId;
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| stats.source_vocab().id(t).unwrap_or(n + i as TokenId))
        .collect()
}

fn intern_stream(tokens: &[String]) -> Vec<u32> {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    tokens
        .iter()
        .map(|t| {
            let next = ids.len() as u32;
            *ids.entry(t.as_str()).or_insert(next)
        })
        .collect()
}

fn load_seeded(stats: &CooccurStats, src: &str, tgt: &str) -> PyResult<ParallelCorpus> {
    load_parallel_corpus_seeded(
        Path::new(src),
        Path::new(tgt),
        stats.source_vocab().clone(),
        stats.target_vocab().clone(),
    )
    .map_err(value_err)
}

#[pyclass(name = "CooccurStats", frozen)]
struct PyCooccurStats {
    inner: CooccurStats,
}

#[pymethods]
impl PyCooccurStats {
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CooccurStats::read_from(Path::new(path)).map_err(value_err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        self.inner.write_to(Path::new(path)).map_err(value_err)
    }

    /// Number of sentence pairs counted.
    fn k(&self) -> u64 {
        self.inner.k()
    }

    fn source_count(&self, token: &str) -> u64 {
        self.inner
            .source_vocab()
            .id(token)
            .map_or(0, |x| self.inner.source_count(x))
    }

    fn target_count(&self, token: &str) -> u64 {
        self.inner
            .target_vocab()
            .id(token)
            .map_or(0, |y| self.inner.target_count(y))
    }

    fn pair_count(&self, source: &str, target: &str) -> u64 {
        match (
            self.inner.source_vocab().id(source),
            self.inner.target_vocab().id(target),
        ) {
            (Some(x), Some(y)) => self.inner.pair_count(x, y),
            _ => 0,
        }
    }

    fn pair_entries(&self) -> usize {
        self.inner.pair_entries()
    }

    fn __repr__(&self) -> String {
        format!(
            "CooccurStats(k={}, source_types={}, target_types={}, pair_entries={})",
            self.inner.k(),
            self.inner.source_vocab().len(),
            self.inner.target_vocab().len(),
            self.inner.pair_entries()
        )
    }
}

/// Counts a line-aligned corpus into co-occurrence statistics.
#[pyfunction]
#[pyo3(signature = (src, tgt, max_sentence_len=1024, threads=0))]
fn build_stats(
    src: &str,
    tgt: &str,
    max_sentence_len: usize,
    threads: usize,
) -> PyResult<PyCooccurStats> {
    let corpus = load_parallel_corpus(Path::new(src), Path::new(tgt)).map_err(value_err)?;
    let opts = BuildOptions {
        max_sentence_len,
        threads,
    };
    Ok(PyCooccurStats {
        inner: build_stats_with(&corpus, &opts).map_err(value_err)?,
    })
}

/// Log association of one source/target token pair (0 when unseen).
#[pyfunction]
fn pmi(stats: &PyCooccurStats, source: &str, target: &str) -> f64 {
    match (
        stats.inner.source_vocab().id(source),
        stats.inner.target_vocab().id(target),
    ) {
        (Some(x), Some(y)) => bmi::pmi_term(&stats.inner, x, y),
        _ => 0.0,
    }
}

/// Association score of each target token against the source sentence.
#[pyfunction]
#[pyo3(signature = (stats, source, target, per_occurrence=false, floor=None))]
fn score_sentence(
    stats: &PyCooccurStats,
    source: Vec<String>,
    target: Vec<String>,
    per_occurrence: bool,
    floor: Option<u64>,
) -> Vec<f64> {
    let opts = score_options(per_occurrence, floor);
    let src = source_ids(&stats.inner, &source);
    target
        .iter()
        .map(|t| {
            stats.inner.target_vocab().id(t).map_or(0.0, |y| {
                bmi::score_token_with(&stats.inner, &src, y, &opts)
            })
        })
        .collect()
}

/// Writes the weight file for a corpus and returns its summary.
#[pyfunction]
#[pyo3(signature = (
    stats, src, tgt, out, schedule="bmi", scale=0.1, base=1.0, threshold=0.4,
    amplitude=1.0, decay=1e-5, per_occurrence=false, floor=None
))]
#[allow(clippy::too_many_arguments)]
fn emit_weights<'py>(
    py: Python<'py>,
    stats: &PyCooccurStats,
    src: &str,
    tgt: &str,
    out: &str,
    schedule: &str,
    scale: f64,
    base: f64,
    threshold: f64,
    amplitude: f64,
    decay: f64,
    per_occurrence: bool,
    floor: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let schedule = schedule_from(schedule, scale, base, threshold, amplitude, decay)?;
    let opts = score_options(per_occurrence, floor);
    let corpus = load_seeded(&stats.inner, src, tgt)?;
    let summary = bmi::emit_weights(&stats.inner, &corpus, &schedule, &opts, Path::new(out))
        .map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("rows", summary.rows)?;
    dict.set_item("tokens", summary.tokens)?;
    dict.set_item("zeros", summary.zeros)?;
    dict.set_item("mean", summary.mean)?;
    dict.set_item("min", summary.min)?;
    dict.set_item("max", summary.max)?;
    Ok(dict)
}

/// Weight of a single score under the affine thresholded schedule.
#[pyfunction]
#[pyo3(name = "weight_bmi")]
fn weight_bmi_py(score: f64, scale: f64, base: f64, threshold: f64) -> f64 {
    weight_bmi(score, scale, base, threshold)
}

#[pyfunction]
#[pyo3(name = "weight_exponential")]
fn weight_exponential_py(count: u64, amplitude: f64, decay: f64) -> f64 {
    weight_exponential(count, amplitude, decay)
}

#[pyfunction]
#[pyo3(name = "weight_chisquare")]
fn weight_chisquare_py(count: u64, amplitude: f64, decay: f64) -> f64 {
    weight_chisquare(count, amplitude, decay)
}

/// Buckets sentences by mean score; returns (sizes, labels, ranges).
#[pyfunction]
fn bucket(stats: &PyCooccurStats, src: &str, tgt: &str, k: usize) -> PyResult<BucketTuple> {
    let corpus = load_seeded(&stats.inner, src, tgt)?;
    let got = analysis::bucket_by_avg_bmi(&stats.inner, &corpus, k).map_err(value_err)?;
    Ok((got.sizes, got.labels, got.ranges))
}

/// Mapping table for a target token: (entries, target_count, concentration)
/// where each entry is (source, count, pmi, share).
#[pyfunction]
#[pyo3(signature = (stats, token, limit=0))]
fn mapping(stats: &PyCooccurStats, token: &str, limit: usize) -> PyResult<MappingTuple> {
    let report = analysis::mapping_report(&stats.inner, token, limit).map_err(value_err)?;
    let entries = report
        .entries
        .into_iter()
        .map(|e| (e.source, e.count, e.pmi, e.share))
        .collect();
    Ok((entries, report.target_count, report.concentration))
}

#[pyfunction]
fn ttr(tokens: Vec<String>) -> PyResult<f64> {
    lexdiv::ttr(&intern_stream(&tokens)).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (tokens, window=50))]
fn mattr(tokens: Vec<String>, window: usize) -> PyResult<f64> {
    lexdiv::mattr(&intern_stream(&tokens), window).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (tokens, sample=42))]
fn hdd(tokens: Vec<String>, sample: usize) -> PyResult<f64> {
    lexdiv::hdd(&intern_stream(&tokens), sample).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (tokens, threshold=0.72))]
fn mtld(tokens: Vec<String>, threshold: f64) -> PyResult<f64> {
    lexdiv::mtld(&intern_stream(&tokens), threshold).map_err(value_err)
}

/// Trains the toy classifier; returns the mean loss per epoch.
#[pyfunction]
#[pyo3(signature = (
    src, tgt, weights, epochs=50, phase_split=0.5, learning_rate=0.5,
    epsilon=0.1, seed=42
))]
#[allow(clippy::too_many_arguments)]
fn toy_train(
    src: &str,
    tgt: &str,
    weights: &str,
    epochs: usize,
    phase_split: f64,
    learning_rate: f64,
    epsilon: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let corpus = load_parallel_corpus(Path::new(src), Path::new(tgt)).map_err(value_err)?;
    let rows = bmi::read_weight_file(Path::new(weights)).map_err(value_err)?;
    let opts = TrainOptions {
        learning_rate,
        epsilon,
        seed,
        probes: vec![],
    };
    let run =
        train_toy_model(&corpus, &rows, epochs, phase_split, &opts).map_err(value_err)?;
    Ok(run.log.into_iter().map(|e| e.mean_loss).collect())
}

#[pymodule]
fn bmikit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCooccurStats>()?;
    m.add_function(wrap_pyfunction!(build_stats, m)?)?;
    m.add_function(wrap_pyfunction!(pmi, m)?)?;
    m.add_function(wrap_pyfunction!(score_sentence, m)?)?;
    m.add_function(wrap_pyfunction!(emit_weights, m)?)?;
    m.add_function(wrap_pyfunction!(weight_bmi_py, m)?)?;
    m.add_function(wrap_pyfunction!(weight_exponential_py, m)?)?;
    m.add_function(wrap_pyfunction!(weight_chisquare_py, m)?)?;
    m.add_function(wrap_pyfunction!(bucket, m)?)?;
    m.add_function(wrap_pyfunction!(mapping, m)?)?;
    m.add_function(wrap_pyfunction!(ttr, m)?)?;
    m.add_function(wrap_pyfunction!(mattr, m)?)?;
    m.add_function(wrap_pyfunction!(hdd, m)?)?;
    m.add_function(wrap_pyfunction!(mtld, m)?)?;
    m.add_function(wrap_pyfunction!(toy_train, m)?)?;
    Ok(())
}
