//! Command-line surface. Every pipeline stage is a subcommand; diagnostics go
//! to stderr, data to stdout or `--out`. Exit codes: 0 success, 1 usage
//! error, 2 data or validation error. Numeric parameters are validated
//! before any file is opened, and output files appear atomically or not at
//! all.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::analysis::{
    bucket_by_avg_bmi, frequency_table, mapping_report, render_frequency_table,
    render_frequency_tsv, AnalysisError,
};
use crate::bmi::{
    emit_weights, read_weight_file, score_sentence_with, BmiError, ScoreOptions, WeightSchedule,
    ZeroPolicy, DEFAULT_AMPLITUDE, DEFAULT_BMI_BASE, DEFAULT_BMI_SCALE, DEFAULT_BMI_THRESHOLD,
    DEFAULT_DECAY,
};
use crate::cooccur::{
    build_stats_with, BuildOptions, CooccurStats, StatsError, DEFAULT_MAX_SENTENCE_LEN,
};
use crate::corpus::{load_parallel_corpus, load_parallel_corpus_seeded, CorpusError, Side};
use crate::lexdiv::{
    hdd, mattr, mtld, DiversityReport, LexdivError, DEFAULT_HDD_SAMPLE, DEFAULT_MATTR_WINDOW,
    DEFAULT_MTLD_THRESHOLD,
};
use crate::loss::{
    finite_diff_check, train_toy_model, LossBatch, LossError, TrainOptions,
    DEFAULT_LABEL_SMOOTHING,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Bmi(#[from] BmiError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Lexdiv(#[from] LexdivError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

#[derive(Parser)]
#[command(
    name = "bmikit",
    version,
    about = "Bilingual association statistics, token weighting and diversity metrics"
)]
struct Cli {
    /// Worker threads for counting and weighting; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count document and co-occurrence frequencies of a parallel corpus.
    Stats(StatsArgs),
    /// Emit per-token training weights for a corpus against statistics.
    Weights(WeightsArgs),
    /// Score every sentence pair: per-token association and its mean.
    Score(ScoreArgs),
    /// Partition sentences into difficulty buckets by mean score.
    Bucket(BucketArgs),
    /// Token-level tables computed from the statistics.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Lexical diversity of a whitespace-tokenized text file.
    Lexdiv(LexdivArgs),
    /// Verify the loss gradient against central finite differences.
    LossCheck(LossCheckArgs),
    /// Train the toy classifier with a weight file, logging per-epoch loss.
    ToyTrain(ToyTrainArgs),
    /// Print every tunable default and where it comes from.
    Defaults,
}

#[derive(Args)]
struct StatsArgs {
    /// Source-side text, one sentence per line.
    #[arg(long)]
    src: PathBuf,
    /// Target-side text, aligned line by line.
    #[arg(long)]
    tgt: PathBuf,
    /// Statistics file to write.
    #[arg(long)]
    out: PathBuf,
    /// Longest sentence accepted, in tokens.
    #[arg(long, default_value_t = DEFAULT_MAX_SENTENCE_LEN)]
    max_sentence_len: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleKind {
    /// Affine in the association score, zero below the threshold.
    #[value(name = "bmi")]
    Bmi,
    /// amplitude * exp(-decay * count) + 1.
    #[value(name = "exp")]
    Exp,
    /// amplitude * count^2 * exp(-decay * count) + 1.
    #[value(name = "chi2")]
    Chi2,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct WeightsArgs {
    /// Statistics file from `stats`.
    #[arg(long)]
    stats: PathBuf,
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Weight file to write, one tab-separated line per sentence pair.
    #[arg(long)]
    out: PathBuf,
    /// Weighting family.
    #[arg(long, value_enum)]
    schedule: ScheduleKind,
    /// Scale on the score (bmi schedule).
    #[arg(long, default_value_t = DEFAULT_BMI_SCALE)]
    scale: f64,
    /// Offset added to the scaled score (bmi schedule).
    #[arg(long, default_value_t = DEFAULT_BMI_BASE)]
    base: f64,
    /// Scores below this weigh zero (bmi schedule).
    #[arg(long, default_value_t = DEFAULT_BMI_THRESHOLD)]
    threshold: f64,
    /// Peak boost over 1 (exp and chi2 schedules).
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE)]
    amplitude: f64,
    /// Count decay rate (exp and chi2 schedules).
    #[arg(long, default_value_t = DEFAULT_DECAY)]
    decay: f64,
    #[command(flatten)]
    scoring: ScoringFlags,
}

impl WeightsArgs {
    fn schedule(&self) -> WeightSchedule {
        match self.schedule {
            ScheduleKind::Bmi => WeightSchedule::Bmi {
                scale: self.scale,
                base: self.base,
                threshold: self.threshold,
            },
            ScheduleKind::Exp => WeightSchedule::Exponential {
                amplitude: self.amplitude,
                decay: self.decay,
            },
            ScheduleKind::Chi2 => WeightSchedule::ChiSquare {
                amplitude: self.amplitude,
                decay: self.decay,
            },
        }
    }
}

#[derive(Args)]
struct ScoringFlags {
    /// Score every source occurrence instead of each distinct source type.
    #[arg(long)]
    per_occurrence: bool,
    /// Treat unseen pairs as if observed this many times instead of skipping.
    #[arg(long)]
    floor: Option<u64>,
}

impl ScoringFlags {
    fn build(&self) -> ScoreOptions {
        ScoreOptions {
            zero_policy: match self.floor {
                Some(f) => ZeroPolicy::Floor(f),
                None => ZeroPolicy::Skip,
            },
            dedup_source: !self.per_occurrence,
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    stats: PathBuf,
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scoring: ScoringFlags,
}

#[derive(Args)]
struct BucketArgs {
    #[arg(long)]
    stats: PathBuf,
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// How many buckets to split into, lowest scores first.
    #[arg(long)]
    buckets: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Which source tokens a target token co-occurs with.
    Mapping(MappingArgs),
    /// Document frequencies of one side, most frequent first.
    Frequency(FrequencyArgs),
}

#[derive(Args)]
struct MappingArgs {
    #[arg(long)]
    stats: PathBuf,
    /// Target token to look up.
    #[arg(long)]
    token: String,
    /// Keep only the strongest sources; 0 keeps all.
    #[arg(long, default_value_t = 0)]
    limit: usize,
    /// Tab-separated rows instead of the aligned table.
    #[arg(long)]
    tsv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideKind {
    Source,
    Target,
}

#[derive(Args)]
struct FrequencyArgs {
    #[arg(long)]
    stats: PathBuf,
    /// Which side's frequencies to list.
    #[arg(long, value_enum)]
    side: SideKind,
    /// Keep only the most frequent tokens; 0 keeps all.
    #[arg(long, default_value_t = 0)]
    limit: usize,
    /// Tab-separated rows instead of the aligned table.
    #[arg(long)]
    tsv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Mattr,
    Hdd,
    Mtld,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LexdivArgs {
    /// Whitespace-tokenized text file, measured as one stream.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricKind,
    /// Window length (mattr).
    #[arg(long, default_value_t = DEFAULT_MATTR_WINDOW)]
    window: usize,
    /// Draw size (hdd).
    #[arg(long, default_value_t = DEFAULT_HDD_SAMPLE)]
    sample: usize,
    /// Type-token ratio at which a factor completes (mtld).
    #[arg(long, default_value_t = DEFAULT_MTLD_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LossCheckArgs {
    /// Batch positions to generate.
    #[arg(long, default_value_t = 8)]
    positions: usize,
    /// Vocabulary size of the generated batch.
    #[arg(long, default_value_t = 16)]
    vocab: usize,
    /// Label smoothing mass.
    #[arg(long, default_value_t = DEFAULT_LABEL_SMOOTHING)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Largest acceptable relative deviation.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ToyTrainArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Weight file from `weights`, aligned row for row with the corpus.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Fraction of epochs trained uniformly before the weights kick in.
    #[arg(long, default_value_t = 0.5)]
    phase_split: f64,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    /// Label smoothing mass.
    #[arg(long, default_value_t = DEFAULT_LABEL_SMOOTHING)]
    epsilon: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Target token whose loss is logged each epoch; repeatable.
    #[arg(long = "probe")]
    probes: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses and dispatches, mapping outcomes onto the exit-code contract.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // Caps the shared pool used by per-sentence scoring. Counting builds
        // its own pool from the same flag.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stats(a) => run_stats(a, cli.threads),
        Command::Weights(a) => run_weights(a),
        Command::Score(a) => run_score(a),
        Command::Bucket(a) => run_bucket(a),
        Command::Report(ReportCommand::Mapping(a)) => run_mapping(a),
        Command::Report(ReportCommand::Frequency(a)) => run_frequency(a),
        Command::Lexdiv(a) => run_lexdiv(a),
        Command::LossCheck(a) => run_loss_check(a),
        Command::ToyTrain(a) => run_toy_train(a),
        Command::Defaults => run_defaults(),
    }
}

fn deliver(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => crate::util::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_scored_corpus(
    stats_path: &Path,
    src: &Path,
    tgt: &Path,
) -> Result<(CooccurStats, crate::corpus::ParallelCorpus), CliError> {
    let stats = CooccurStats::read_from(stats_path)?;
    // Seeding with the statistics vocabularies keeps shared ids aligned;
    // tokens the statistics never saw get fresh ids and score zero.
    let corpus = load_parallel_corpus_seeded(
        src,
        tgt,
        stats.source_vocab().clone(),
        stats.target_vocab().clone(),
    )?;
    Ok((stats, corpus))
}

fn run_stats(a: StatsArgs, threads: usize) -> Result<(), CliError> {
    if a.max_sentence_len == 0 {
        return Err(invalid("sentence length limit must be at least 1"));
    }
    let corpus = load_parallel_corpus(&a.src, &a.tgt)?;
    let opts = BuildOptions {
        max_sentence_len: a.max_sentence_len,
        threads,
    };
    let stats = build_stats_with(&corpus, &opts)?;
    stats.write_to(&a.out)?;
    eprintln!(
        "counted {} sentence pairs: {} source types, {} target types, {} pair entries",
        stats.k(),
        stats.source_vocab().len(),
        stats.target_vocab().len(),
        stats.pair_entries()
    );
    Ok(())
}

fn run_weights(a: WeightsArgs) -> Result<(), CliError> {
    let schedule = a.schedule();
    schedule.validate()?;
    let opts = a.scoring.build();
    let (stats, corpus) = load_scored_corpus(&a.stats, &a.src, &a.tgt)?;
    let summary = emit_weights(&stats, &corpus, &schedule, &opts, &a.out)?;
    println!(
        "rows={} tokens={} zeros={} mean={:.6} min={:.6} max={:.6}",
        summary.rows, summary.tokens, summary.zeros, summary.mean, summary.min, summary.max
    );
    Ok(())
}

fn run_score(a: ScoreArgs) -> Result<(), CliError> {
    let opts = a.scoring.build();
    let (stats, corpus) = load_scored_corpus(&a.stats, &a.src, &a.tgt)?;
    let mut text = String::new();
    for pair in corpus.pairs() {
        let sentence = score_sentence_with(&stats, pair, &opts);
        let _ = write!(text, "index={} mean={:.6} scores=", sentence.index, sentence.mean());
        for (j, s) in sentence.scores.iter().enumerate() {
            if j > 0 {
                text.push(',');
            }
            let _ = write!(text, "{s:.6}");
        }
        text.push('\n');
    }
    deliver(a.out.as_ref(), &text)
}

fn run_bucket(a: BucketArgs) -> Result<(), CliError> {
    let (stats, corpus) = load_scored_corpus(&a.stats, &a.src, &a.tgt)?;
    let assignment = bucket_by_avg_bmi(&stats, &corpus, a.buckets)?;
    deliver(a.out.as_ref(), &assignment.render())?;
    for (b, (size, range)) in assignment.sizes.iter().zip(&assignment.ranges).enumerate() {
        eprintln!(
            "bucket {b}: {size} sentences, scores {:.6} to {:.6}",
            range.0, range.1
        );
    }
    Ok(())
}

fn run_mapping(a: MappingArgs) -> Result<(), CliError> {
    let stats = CooccurStats::read_from(&a.stats)?;
    let report = mapping_report(&stats, &a.token, a.limit)?;
    if a.tsv {
        eprintln!(
            "target={} count={} concentration={:.6}",
            report.target, report.target_count, report.concentration
        );
        deliver(a.out.as_ref(), &report.render_tsv())
    } else {
        deliver(a.out.as_ref(), &report.render_table())
    }
}

fn run_frequency(a: FrequencyArgs) -> Result<(), CliError> {
    let stats = CooccurStats::read_from(&a.stats)?;
    let side = match a.side {
        SideKind::Source => Side::Source,
        SideKind::Target => Side::Target,
    };
    let rows = frequency_table(&stats, side, a.limit);
    let text = if a.tsv {
        render_frequency_tsv(&rows)
    } else {
        render_frequency_table(&rows)
    };
    deliver(a.out.as_ref(), &text)
}

fn run_lexdiv(a: LexdivArgs) -> Result<(), CliError> {
    // Parameter gates come before the file is opened.
    match a.metric {
        MetricKind::Mattr if a.window == 0 => {
            return Err(invalid("window must be at least 1"));
        }
        MetricKind::Hdd if a.sample == 0 => return Err(LexdivError::ZeroSample.into()),
        MetricKind::Mtld
            if !(a.threshold.is_finite() && a.threshold > 0.0 && a.threshold < 1.0) =>
        {
            return Err(LexdivError::ThresholdOutOfRange(a.threshold).into());
        }
        _ => {}
    }
    let text = std::fs::read_to_string(&a.input)?;
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let stream: Vec<u32> = text
        .split_whitespace()
        .map(|tok| {
            let next = ids.len() as u32;
            *ids.entry(tok).or_insert(next)
        })
        .collect();
    let (name, value, params) = match a.metric {
        MetricKind::Mattr => (
            "mattr",
            mattr(&stream, a.window)?,
            vec![("window".to_string(), a.window.to_string())],
        ),
        MetricKind::Hdd => (
            "hdd",
            hdd(&stream, a.sample)?,
            vec![("sample".to_string(), a.sample.to_string())],
        ),
        MetricKind::Mtld => (
            "mtld",
            mtld(&stream, a.threshold)?,
            vec![("threshold".to_string(), a.threshold.to_string())],
        ),
    };
    let report = DiversityReport {
        metric: name.to_string(),
        value,
        params,
        n: stream.len(),
    };
    deliver(a.out.as_ref(), &(report.render() + "\n"))
}

fn run_loss_check(a: LossCheckArgs) -> Result<(), CliError> {
    if a.positions == 0 {
        return Err(invalid("positions must be at least 1"));
    }
    if a.vocab < 2 {
        return Err(invalid("vocab must be at least 2"));
    }
    if !(a.tolerance.is_finite() && a.tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let rows: Vec<Vec<f64>> = (0..a.positions)
        .map(|_| (0..a.vocab).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let gold: Vec<usize> = (0..a.positions)
        .map(|_| rng.random_range(0..a.vocab))
        .collect();
    let weights: Vec<f64> = (0..a.positions)
        .map(|_| rng.random_range(0.0..2.0))
        .collect();
    let batch = LossBatch::from_logits(rows, gold, weights, a.epsilon)?;
    let worst = finite_diff_check(&batch, a.step)?;
    if worst > a.tolerance {
        return Err(invalid(format!(
            "gradient check failed: worst relative deviation {worst:.3e} exceeds {:.3e}",
            a.tolerance
        )));
    }
    println!(
        "positions={} vocab={} epsilon={} step={:e} worst={:.3e} status=ok",
        a.positions, a.vocab, a.epsilon, a.step, worst
    );
    Ok(())
}

fn run_toy_train(a: ToyTrainArgs) -> Result<(), CliError> {
    if a.epochs == 0 {
        return Err(invalid("epochs must be at least 1"));
    }
    if !(a.phase_split.is_finite() && (0.0..=1.0).contains(&a.phase_split)) {
        return Err(invalid("phase split must lie in [0, 1]"));
    }
    if !(a.learning_rate.is_finite() && a.learning_rate >= 0.0) {
        return Err(invalid("learning rate must be finite and non-negative"));
    }
    if !(a.epsilon.is_finite() && (0.0..1.0).contains(&a.epsilon)) {
        return Err(invalid("epsilon must lie in [0, 1)"));
    }
    let corpus = load_parallel_corpus(&a.src, &a.tgt)?;
    let weight_rows = read_weight_file(&a.weights)?;
    let opts = TrainOptions {
        learning_rate: a.learning_rate,
        epsilon: a.epsilon,
        seed: a.seed,
        probes: a.probes,
    };
    let run = train_toy_model(&corpus, &weight_rows, a.epochs, a.phase_split, &opts)?;
    deliver(a.out.as_ref(), &run.render())
}

fn run_defaults() -> Result<(), CliError> {
    let rows: [(&str, String, &str); 10] = [
        ("bmi-scale", format!("{DEFAULT_BMI_SCALE}"), "literature"),
        ("bmi-base", format!("{DEFAULT_BMI_BASE}"), "literature"),
        (
            "bmi-threshold",
            format!("{DEFAULT_BMI_THRESHOLD}"),
            "literature",
        ),
        ("amplitude", format!("{DEFAULT_AMPLITUDE}"), "tool-chosen"),
        ("decay", format!("{DEFAULT_DECAY}"), "tool-chosen"),
        (
            "label-smoothing",
            format!("{DEFAULT_LABEL_SMOOTHING}"),
            "literature",
        ),
        (
            "mattr-window",
            format!("{DEFAULT_MATTR_WINDOW}"),
            "tool-chosen",
        ),
        ("hdd-sample", format!("{DEFAULT_HDD_SAMPLE}"), "literature"),
        (
            "mtld-threshold",
            format!("{DEFAULT_MTLD_THRESHOLD}"),
            "literature",
        ),
        (
            "max-sentence-len",
            format!("{DEFAULT_MAX_SENTENCE_LEN}"),
            "tool-chosen",
        ),
    ];
    for (name, value, source) in rows {
        println!("name={name} value={value} source={source}");
    }
    Ok(())
}
