//! The training loop: one-cycle schedule driving AdamW over shuffled
//! batches, eval-mode metrics, and seeded multi-run averaging.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{batches, Dataset, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::model::{Model, ModelConfig};
use crate::ops;
use crate::optim::{adam_step, one_cycle, AdamParams, AdamState, OneCycleSpec};
use crate::rng::SeedRng;
use crate::tape::GradTape;
use crate::Mode;

/// Optimizer + schedule knobs, all f64. Defaults follow the recipe:
/// lr 1e-3, weight decay 1e-2, betas (cycled, 0.99), one-cycle with
/// momentum between 0.8 and 0.7.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub lr_max: f64,
    pub weight_decay: f64,
    /// true = AdamW-style multiplicative decay; false = classic L2 term
    /// added to the gradient (ablation).
    pub decoupled_decay: bool,
    pub beta2: f64,
    pub eps: f64,
    pub pct_up: f64,
    pub div: f64,
    pub final_div: f64,
    pub mom_high: f64,
    pub mom_low: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr_max: 1e-3,
            weight_decay: 1e-2,
            decoupled_decay: true,
            beta2: 0.99,
            eps: 1e-8,
            pct_up: 0.3,
            div: 25.0,
            final_div: 1e4,
            mom_high: 0.8,
            mom_low: 0.7,
        }
    }
}

impl OptimizerConfig {
    fn schedule(&self, total_steps: usize) -> Result<OneCycleSpec> {
        let spec = OneCycleSpec {
            lr_max: self.lr_max,
            total_steps,
            pct_up: self.pct_up,
            div: self.div,
            final_div: self.final_div,
            mom_high: self.mom_high,
            mom_low: self.mom_low,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn adam(&self) -> AdamParams {
        AdamParams {
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
            decoupled_decay: self.decoupled_decay,
        }
    }
}

/// Which corpus to load and from where. Headlines ships as one file and
/// is split here; SARC comes pre-split as two files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Headlines,
    SarcMain,
    SarcPol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub dataset: DatasetKind,
    /// Headlines: the whole corpus. SARC: the train half.
    pub train_path: String,
    /// SARC only; ignored (may be empty) for Headlines.
    pub test_path: String,
    pub embeddings_path: String,
    pub test_frac: f64,
    pub split_seed: u64,
    pub min_freq: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dataset: DatasetKind::Headlines,
            train_path: String::new(),
            test_path: String::new(),
            embeddings_path: String::new(),
            test_frac: 0.2,
            split_seed: 42,
            min_freq: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub runs: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { epochs: 10, batch_size: 64, seed: 42, runs: 20 }
    }
}

/// Everything a run needs, mirrored one-to-one by the JSON config
/// sections.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub data: DataConfig,
    pub training: TrainingConfig,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let o = &self.optimizer;
        if !(o.lr_max > 0.0) || !(o.weight_decay >= 0.0) {
            return Err(Error::Config(alloc::format!(
                "lr_max {} / weight_decay {} out of range",
                o.lr_max,
                o.weight_decay
            )));
        }
        // div/pct_up/momentum ranges are checked by the schedule itself
        // once total_steps is known; catch plain nonsense early.
        if !(o.pct_up > 0.0 && o.pct_up < 1.0) || !(o.div > 1.0) || !(o.final_div > 1.0) {
            return Err(Error::Config(String::from(
                "one-cycle shape parameters out of range",
            )));
        }
        if self.training.batch_size == 0 {
            return Err(Error::Config(String::from("batch_size 0")));
        }
        if self.training.runs == 0 {
            return Err(Error::Config(String::from("runs 0")));
        }
        if !(0.0..=1.0).contains(&self.data.test_frac) {
            return Err(Error::Config(alloc::format!(
                "test_frac {} outside [0, 1]",
                self.data.test_frac
            )));
        }
        Ok(())
    }
}

/// Classification quality plus the raw confusion counts they derive
/// from. Positive class = sarcastic (label 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
    /// Mean train loss per epoch; empty when produced by bare
    /// evaluation.
    pub loss_curve: Vec<f64>,
}

impl Metrics {
    pub fn from_confusion(tp: usize, fp: usize, tn: usize, fneg: usize) -> Metrics {
        let total = tp + fp + tn + fneg;
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            accuracy: ratio(tp + tn, total),
            precision,
            recall,
            f1,
            true_pos: tp,
            false_pos: fp,
            true_neg: tn,
            false_neg: fneg,
            loss_curve: Vec::new(),
        }
    }
}

/// Argmax over a two-logit row with ties going to class 0.
pub(crate) fn argmax2<T: Real>(row: &[T]) -> usize {
    usize::from(row[1] > row[0])
}

/// Eval-mode class prediction for every example, in dataset order.
pub fn predictions<T: Real>(
    model: &Model<T>,
    dataset: &Dataset,
    batch_size: usize,
) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(dataset.len());
    let tape = GradTape::disabled();
    let mut rng = SeedRng::seed_from_u64(0); // eval mode draws nothing
    for batch in batches(dataset, batch_size, None)? {
        let logits = model.forward(&tape, &batch.ids, batch.len(), Mode::Eval, &mut rng)?;
        let ld = logits.data();
        for bi in 0..batch.len() {
            out.push(argmax2(&ld[bi * 2..bi * 2 + 2]) as u8);
        }
    }
    Ok(out)
}

/// Confusion-matrix metrics of `model` on `dataset` in eval mode.
pub fn evaluate<T: Real>(
    model: &Model<T>,
    dataset: &Dataset,
    batch_size: usize,
) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(Error::Data(String::from("evaluate: empty dataset")));
    }
    let preds = predictions(model, dataset, batch_size)?;
    let (mut tp, mut fp, mut tn, mut fneg) = (0, 0, 0, 0);
    for (&pred, &label) in preds.iter().zip(&dataset.labels) {
        match (pred, label) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fneg += 1,
            _ => unreachable!("binary labels validated at load"),
        }
    }
    Ok(Metrics::from_confusion(tp, fp, tn, fneg))
}

pub struct TrainOutcome<T: Real> {
    pub model: Model<T>,
    /// Test-set metrics with the per-epoch train loss curve attached.
    pub metrics: Metrics,
    /// Seed-stream position after training (seed bytes, word position);
    /// checkpoints persist it.
    pub rng_state: ([u8; 32], u128),
}

/// Train a fresh model: `epochs · ceil(n/batch)` Adam steps, each fed
/// (lr, momentum) by the one-cycle schedule, BN in train mode, all
/// randomness (init, shuffling, dropout) from `config.training.seed`.
pub fn train_model<T: Real>(
    config: &TrainConfig,
    embedding: &EmbeddingMatrix<T>,
    train_set: &Dataset,
    test_set: &Dataset,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if embedding.trainable != config.model.embedding_trainable {
        return Err(Error::Config(alloc::format!(
            "embedding built trainable={} but model.embedding_trainable={}",
            embedding.trainable,
            config.model.embedding_trainable
        )));
    }
    if embedding.d != config.model.embed_dim {
        return Err(Error::Config(alloc::format!(
            "embedding d={} but model.embed_dim={}",
            embedding.d,
            config.model.embed_dim
        )));
    }
    let mut rng = SeedRng::seed_from_u64(config.training.seed);
    let model = Model::init(
        config.model.clone(),
        embedding.vocab_size,
        embedding.values.clone(),
        &mut rng,
    )?;

    let bs = config.training.batch_size;
    let steps_per_epoch = train_set.len().div_ceil(bs);
    let total_steps = config.training.epochs * steps_per_epoch;
    let mut loss_curve = Vec::with_capacity(config.training.epochs);

    if total_steps > 0 {
        if train_set.is_empty() {
            return Err(Error::Data(String::from("train_model: empty training set")));
        }
        // The schedule's domain is [0, total]; updates are numbered
        // 0..total_steps so the last one lands exactly on the endpoint.
        // (Degenerate 1–2 step runs stay on the early climb.)
        let spec = config
            .optimizer
            .schedule(total_steps.saturating_sub(1).max(2))?;
        let adam = config.optimizer.adam();
        let mut states: Vec<AdamState<T>> = model
            .named_params()
            .iter()
            .map(|(_, t)| AdamState::new(t.len()))
            .collect();

        let mut step = 0usize;
        for _epoch in 0..config.training.epochs {
            let mut loss_sum = 0.0f64;
            for (bi, batch) in batches(train_set, bs, Some(&mut rng))?.iter().enumerate() {
                let (lr, momentum) = one_cycle(step.min(spec.total_steps), &spec)?;
                let tape = GradTape::new();
                let logits = model.forward(&tape, &batch.ids, batch.len(), Mode::Train, &mut rng)?;
                let (loss, _) = ops::softmax_cross_entropy(&tape, &logits, &batch.labels)?;
                let loss_val = loss.item().to_f();
                if !loss_val.is_finite() {
                    return Err(Error::Train(alloc::format!(
                        "non-finite loss {loss_val} at step {step} (batch {bi}, lr {lr:.3e})"
                    )));
                }
                loss_sum += loss_val * batch.len() as f64;
                tape.backward(&loss)?;
                for ((_, param), state) in model.named_params().iter().zip(&mut states) {
                    adam_step(param, state, lr, momentum, &adam)?;
                }
                model.zero_grads();
                step += 1;
            }
            loss_curve.push(loss_sum / train_set.len() as f64);
        }
    }

    let mut metrics = evaluate(&model, test_set, bs)?;
    metrics.loss_curve = loss_curve;
    Ok(TrainOutcome { model, metrics, rng_state: rng.state() })
}

/// Mean and standard deviation (population, n in the denominator) of
/// one metric across runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn over(values: &[f64]) -> Aggregate {
        if values.is_empty() {
            return Aggregate { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Aggregate { mean, std: num_traits::Float::sqrt(var) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub per_run: Vec<Metrics>,
    pub accuracy: Aggregate,
    pub precision: Aggregate,
    pub recall: Aggregate,
    pub f1: Aggregate,
}

impl RunSummary {
    pub fn from_runs(per_run: Vec<Metrics>) -> RunSummary {
        let col = |f: fn(&Metrics) -> f64| {
            Aggregate::over(&per_run.iter().map(f).collect::<Vec<_>>())
        };
        RunSummary {
            accuracy: col(|m| m.accuracy),
            precision: col(|m| m.precision),
            recall: col(|m| m.recall),
            f1: col(|m| m.f1),
            per_run,
        }
    }
}

/// `n` independent runs, run r seeded with `base_seed + r`; returns the
/// per-run table plus mean/std, and the first run's full outcome (the
/// one a checkpoint should capture).
pub fn multi_run<T: Real>(
    config: &TrainConfig,
    embedding: &EmbeddingMatrix<T>,
    train_set: &Dataset,
    test_set: &Dataset,
    n: usize,
) -> Result<(RunSummary, TrainOutcome<T>)> {
    if n == 0 {
        return Err(Error::Config(String::from("multi_run: n 0")));
    }
    let mut per_run = Vec::with_capacity(n);
    let mut first = None;
    for r in 0..n {
        let mut run_config = config.clone();
        run_config.training.seed = config.training.seed + r as u64;
        let outcome = train_model(&run_config, embedding, train_set, test_set)?;
        per_run.push(outcome.metrics.clone());
        if r == 0 {
            first = Some(outcome);
        }
    }
    Ok((RunSummary::from_runs(per_run), first.expect("n >= 1")))
}
