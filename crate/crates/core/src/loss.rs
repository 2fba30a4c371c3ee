//! Token-weighted cross entropy with optional label smoothing, plus a tiny
//! bag-of-tokens classifier for end-to-end checks of the weighting pipeline.
//!
//! Reduction identities are part of the contract: with unit weights the
//! weighted loss equals plain cross entropy bit for bit, and with zero
//! smoothing the smoothed loss equals the weighted one bit for bit.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::corpus::{ParallelCorpus, TokenId};

pub const DEFAULT_LABEL_SMOOTHING: f64 = 0.1;

#[derive(Debug, thiserror::Error)]
pub enum LossError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("position {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error("position {row}: infinite loss, gold class has zero probability under positive weight")]
    InfiniteLoss { row: usize },
    #[error("{0}")]
    InvalidParam(String),
    #[error("gradients need logits, this batch holds probabilities")]
    NeedsLogits,
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("probe token {0:?} does not occur in the corpus targets")]
    UnknownProbe(String),
    #[error("weight rows do not match the corpus: {0}")]
    WeightShape(String),
}

#[derive(Debug, Clone)]
enum Rows {
    Probs(Vec<Vec<f64>>),
    Logits(Vec<Vec<f64>>),
}

/// One batch of next-token predictions: a distribution (or its logits) per
/// position, the gold index, a per-position weight, and a smoothing mass.
#[derive(Debug, Clone)]
pub struct LossBatch {
    rows: Rows,
    gold: Vec<usize>,
    weights: Vec<f64>,
    epsilon: f64,
}

impl LossBatch {
    pub fn from_probs(
        rows: Vec<Vec<f64>>,
        gold: Vec<usize>,
        weights: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, LossError> {
        let batch = Self::validated(Rows::Probs(rows), gold, weights, epsilon)?;
        let Rows::Probs(rows) = &batch.rows else {
            unreachable!()
        };
        for (j, row) in rows.iter().enumerate() {
            let bad = |reason: String| LossError::InvalidRow { row: j, reason };
            for &p in row {
                if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                    return Err(bad(format!("probability {p} outside [0, 1]")));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(bad(format!("probabilities sum to {sum}")));
            }
        }
        Ok(batch)
    }

    pub fn from_logits(
        rows: Vec<Vec<f64>>,
        gold: Vec<usize>,
        weights: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, LossError> {
        let batch = Self::validated(Rows::Logits(rows), gold, weights, epsilon)?;
        let Rows::Logits(rows) = &batch.rows else {
            unreachable!()
        };
        for (j, row) in rows.iter().enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(LossError::InvalidRow {
                    row: j,
                    reason: "non-finite logit".into(),
                });
            }
        }
        Ok(batch)
    }

    fn validated(
        rows: Rows,
        gold: Vec<usize>,
        weights: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, LossError> {
        let raw = match &rows {
            Rows::Probs(r) | Rows::Logits(r) => r,
        };
        if raw.is_empty() {
            return Err(LossError::EmptyBatch);
        }
        let vocab = raw[0].len();
        if vocab == 0 {
            return Err(LossError::InvalidRow {
                row: 0,
                reason: "empty vocabulary".into(),
            });
        }
        if gold.len() != raw.len() || weights.len() != raw.len() {
            return Err(LossError::InvalidParam(format!(
                "{} rows but {} gold indices and {} weights",
                raw.len(),
                gold.len(),
                weights.len()
            )));
        }
        for (j, row) in raw.iter().enumerate() {
            let bad = |reason: String| LossError::InvalidRow { row: j, reason };
            if row.len() != vocab {
                return Err(bad(format!(
                    "{} columns where the batch has {vocab}",
                    row.len()
                )));
            }
            if gold[j] >= vocab {
                return Err(bad(format!("gold index {} out of {vocab}", gold[j])));
            }
            if !(weights[j].is_finite() && weights[j] >= 0.0) {
                return Err(bad(format!("weight {} must be finite and >= 0", weights[j])));
            }
        }
        if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
            return Err(LossError::InvalidParam(format!(
                "smoothing {epsilon} outside [0, 1)"
            )));
        }
        if epsilon > 0.0 && vocab < 2 {
            return Err(LossError::InvalidParam(
                "smoothing needs at least two classes".into(),
            ));
        }
        Ok(Self {
            rows,
            gold,
            weights,
            epsilon,
        })
    }

    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn vocab(&self) -> usize {
        match &self.rows {
            Rows::Probs(r) | Rows::Logits(r) => r[0].len(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Gold-class probability at one position.
    fn gold_prob(&self, j: usize) -> f64 {
        match &self.rows {
            Rows::Probs(rows) => rows[j][self.gold[j]],
            Rows::Logits(rows) => softmax(&rows[j])[self.gold[j]],
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Unweighted mean negative log likelihood of the gold tokens. A zero gold
/// probability is a hard error rather than a silent infinity.
pub fn cross_entropy(batch: &LossBatch) -> Result<f64, LossError> {
    let mut sum = 0.0;
    for j in 0..batch.len() {
        let nll = -(batch.gold_prob(j).ln());
        if !nll.is_finite() {
            return Err(LossError::InfiniteLoss { row: j });
        }
        sum += nll;
    }
    Ok(sum / batch.len() as f64)
}

/// Weighted mean: (1/m) * sum of w_j * -ln p_j. Zero-weight positions are
/// skipped outright so their predictions may be arbitrarily bad; a zero gold
/// probability under positive weight is a hard error.
pub fn weighted_cross_entropy(batch: &LossBatch) -> Result<f64, LossError> {
    let mut sum = 0.0;
    for j in 0..batch.len() {
        let w = batch.weights[j];
        if w == 0.0 {
            continue;
        }
        let nll = -(batch.gold_prob(j).ln());
        if !nll.is_finite() {
            return Err(LossError::InfiniteLoss { row: j });
        }
        sum += w * nll;
    }
    Ok(sum / batch.len() as f64)
}

/// Weighted cross entropy against the smoothed target distribution that puts
/// 1-eps on gold and spreads eps over the other classes.
pub fn smoothed_weighted_cross_entropy(batch: &LossBatch) -> Result<f64, LossError> {
    if batch.epsilon == 0.0 {
        return weighted_cross_entropy(batch);
    }
    let on = 1.0 - batch.epsilon;
    let off = batch.epsilon / (batch.vocab() - 1) as f64;
    let mut sum = 0.0;
    let mut scratch;
    for j in 0..batch.len() {
        let w = batch.weights[j];
        if w == 0.0 {
            continue;
        }
        let probs: &[f64] = match &batch.rows {
            Rows::Probs(rows) => &rows[j],
            Rows::Logits(rows) => {
                scratch = softmax(&rows[j]);
                &scratch
            }
        };
        let mut position = 0.0;
        for (u, &p) in probs.iter().enumerate() {
            let q = if u == batch.gold[j] { on } else { off };
            position += q * -(p.ln());
        }
        if !position.is_finite() {
            return Err(LossError::InfiniteLoss { row: j });
        }
        sum += w * position;
    }
    Ok(sum / batch.len() as f64)
}

/// d(loss)/d(logit): (w_j / m) * (softmax - q) per position.
pub fn grad_logits(batch: &LossBatch) -> Result<Vec<Vec<f64>>, LossError> {
    let Rows::Logits(rows) = &batch.rows else {
        return Err(LossError::NeedsLogits);
    };
    let m = batch.len() as f64;
    let on = 1.0 - batch.epsilon;
    let off = if batch.epsilon == 0.0 {
        0.0
    } else {
        batch.epsilon / (batch.vocab() - 1) as f64
    };
    let mut grads = Vec::with_capacity(rows.len());
    for (j, row) in rows.iter().enumerate() {
        let w = batch.weights[j];
        let p = softmax(row);
        let grad = p
            .iter()
            .enumerate()
            .map(|(u, &pu)| {
                let q = if u == batch.gold[j] { on } else { off };
                (w / m) * (pu - q)
            })
            .collect();
        grads.push(grad);
    }
    Ok(grads)
}

/// Central-difference audit of [`grad_logits`]. Returns the worst relative
/// deviation, |numeric - analytic| / max(1, |numeric|, |analytic|).
pub fn finite_diff_check(batch: &LossBatch, h: f64) -> Result<f64, LossError> {
    let Rows::Logits(rows) = &batch.rows else {
        return Err(LossError::NeedsLogits);
    };
    if !(h.is_finite() && h > 0.0) {
        return Err(LossError::InvalidParam(format!("step {h} must be positive")));
    }
    let analytic = grad_logits(batch)?;
    let mut worst = 0.0f64;
    for j in 0..rows.len() {
        for v in 0..rows[j].len() {
            let mut plus = batch.clone();
            let mut minus = batch.clone();
            match (&mut plus.rows, &mut minus.rows) {
                (Rows::Logits(p), Rows::Logits(m)) => {
                    p[j][v] += h;
                    m[j][v] -= h;
                }
                _ => unreachable!(),
            }
            let lp = smoothed_weighted_cross_entropy(&plus)?;
            let lm = smoothed_weighted_cross_entropy(&minus)?;
            let numeric = (lp - lm) / (2.0 * h);
            let ana = analytic[j][v];
            let err = (numeric - ana).abs() / numeric.abs().max(ana.abs()).max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Target tokens whose unweighted loss is tracked each epoch.
    pub probes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub probe_losses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub probes: Vec<String>,
    pub log: Vec<EpochLog>,
}

impl TrainingRun {
    /// One line per epoch: "epoch=<k> loss=<x>" plus a "probe:<tok>=<x>"
    /// field per probe.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for entry in &self.log {
            out.push_str(&format!("epoch={} loss={:.6}", entry.epoch, entry.mean_loss));
            for (tok, loss) in self.probes.iter().zip(&entry.probe_losses) {
                out.push_str(&format!(" probe:{tok}={loss:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Trains a bag-of-source-tokens classifier of target tokens by full-batch
/// gradient descent. The first ceil(phase_split * epochs) epochs run
/// uniformly weighted; the remainder switch to the supplied per-token
/// weights. Losses are logged before each step.
pub fn train_toy_model(
    corpus: &ParallelCorpus,
    weight_rows: &[Vec<f64>],
    epochs: usize,
    phase_split: f64,
    opts: &TrainOptions,
) -> Result<TrainingRun, LossError> {
    if corpus.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    if epochs == 0 {
        return Err(LossError::InvalidParam("epoch count must be at least 1".into()));
    }
    if !(opts.learning_rate.is_finite() && opts.learning_rate >= 0.0) {
        return Err(LossError::InvalidParam(format!(
            "learning rate {} must be finite and >= 0",
            opts.learning_rate
        )));
    }
    if !(phase_split.is_finite() && (0.0..=1.0).contains(&phase_split)) {
        return Err(LossError::InvalidParam(format!(
            "phase split {phase_split} outside [0, 1]"
        )));
    }
    if weight_rows.len() != corpus.len() {
        return Err(LossError::WeightShape(format!(
            "{} weight rows for {} sentence pairs",
            weight_rows.len(),
            corpus.len()
        )));
    }
    for (i, (row, pair)) in weight_rows.iter().zip(corpus.pairs()).enumerate() {
        if row.len() != pair.target.len() {
            return Err(LossError::WeightShape(format!(
                "row {i} has {} weights for {} target tokens",
                row.len(),
                pair.target.len()
            )));
        }
        if row.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(LossError::WeightShape(format!(
                "row {i} holds a weight that is not finite and >= 0"
            )));
        }
    }

    let v_src = corpus.source_vocab().len();
    let v_tgt = corpus.target_vocab().len();
    let mut probe_ids = Vec::with_capacity(opts.probes.len());
    for tok in &opts.probes {
        let id = corpus
            .target_vocab()
            .id(tok)
            .ok_or_else(|| LossError::UnknownProbe(tok.clone()))?;
        if !corpus.pairs().iter().any(|p| p.target.contains(&id)) {
            return Err(LossError::UnknownProbe(tok.clone()));
        }
        probe_ids.push(id);
    }

    // Sparse per-sentence source count features.
    let features: Vec<Vec<(TokenId, f64)>> = corpus
        .pairs()
        .iter()
        .map(|pair| {
            let mut counts: HashMap<TokenId, f64> = HashMap::new();
            for &x in &pair.source {
                *counts.entry(x).or_insert(0.0) += 1.0;
            }
            let mut sparse: Vec<(TokenId, f64)> = counts.into_iter().collect();
            sparse.sort_unstable_by_key(|&(x, _)| x);
            sparse
        })
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut model: Vec<Vec<f64>> = (0..v_tgt)
        .map(|_| (0..v_src).map(|_| rng.random_range(-1e-3..1e-3)).collect())
        .collect();

    let uniform_epochs = ((phase_split * epochs as f64).ceil() as usize).min(epochs);
    let mut log = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        // Every target position of a sentence shares its logits.
        let sentence_logits: Vec<Vec<f64>> = features
            .iter()
            .map(|feat| {
                (0..v_tgt)
                    .map(|t| feat.iter().map(|&(s, c)| model[t][s as usize] * c).sum())
                    .collect()
            })
            .collect();
        let mut rows = Vec::new();
        let mut gold = Vec::new();
        let mut weights = Vec::new();
        let mut position_sentence = Vec::new();
        for (i, pair) in corpus.pairs().iter().enumerate() {
            for (j, &y) in pair.target.iter().enumerate() {
                rows.push(sentence_logits[i].clone());
                gold.push(y as usize);
                weights.push(if epoch < uniform_epochs {
                    1.0
                } else {
                    weight_rows[i][j]
                });
                position_sentence.push(i);
            }
        }
        let batch = LossBatch::from_logits(rows, gold, weights, opts.epsilon)
            .map_err(|e| match e {
                // Runaway parameters overflow the logits; that is divergence,
                // not caller error.
                LossError::InvalidRow { .. } => LossError::Divergence { epoch },
                other => other,
            })?;
        let mean_loss = match smoothed_weighted_cross_entropy(&batch) {
            Ok(loss) if loss.is_finite() => loss,
            Ok(_) | Err(LossError::InfiniteLoss { .. }) => {
                return Err(LossError::Divergence { epoch })
            }
            Err(other) => return Err(other),
        };

        let probe_losses = probe_ids
            .iter()
            .map(|&y| {
                let mut sum = 0.0;
                let mut n = 0usize;
                for (i, pair) in corpus.pairs().iter().enumerate() {
                    for &tok in &pair.target {
                        if tok == y {
                            sum += -(softmax(&sentence_logits[i])[y as usize].ln());
                            n += 1;
                        }
                    }
                }
                sum / n as f64
            })
            .collect();
        log.push(EpochLog {
            epoch,
            mean_loss,
            probe_losses,
        });

        let grads = grad_logits(&batch)?;
        for (j, grad) in grads.iter().enumerate() {
            let feat = &features[position_sentence[j]];
            for (t, &g) in grad.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                for &(s, c) in feat {
                    model[t][s as usize] -= opts.learning_rate * g * c;
                }
            }
        }
    }
    Ok(TrainingRun {
        probes: opts.probes.clone(),
        log,
    })
}
