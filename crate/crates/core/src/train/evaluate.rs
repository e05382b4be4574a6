//! Candidate training and fitness.

use crate::data::{Dataset, Example};
use crate::error::{Error, Result};
use crate::graph::compile::{compile, CompileOptions, ComputationGraph};
use crate::graph::{enforce_budget, BudgetDecision};
use crate::space::genome::Genome;
use crate::space::vocab::Vocabulary;
use crate::tensor::{Adam, Mode, ParameterStore, Scalar, Tape};
use crate::train::metrics::recall_at_k;
use crate::train::model::{init_model, model_forward, predict, DataShape, ModelConfig};
use crate::train::schedule::{lr_at, Schedule};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use std::time::Instant;

/// Smoothing window of the loss-increase check, in steps.
pub const LOSS_WINDOW: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::InvalidArgument(format!("unknown precision {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub schedule: Schedule,
    pub seed: u64,
    /// Largest accepted parameter count of the searched graph.
    pub param_budget: u64,
    pub recall_k: usize,
    pub eval_batch: usize,
    pub precision: Precision,
    pub max_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            batch_size: 32,
            peak_lr: 4.23e-4,
            schedule: Schedule::Cosine,
            seed: 0,
            param_budget: 76_000_000,
            recall_k: 5,
            eval_batch: 256,
            precision: Precision::F32,
            max_width: 4096,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.peak_lr > 0.0 && self.peak_lr.is_finite()) {
            return bad("peak learning rate must be positive and finite");
        }
        if self.recall_k == 0 {
            return bad("recall k must be positive");
        }
        if self.eval_batch == 0 {
            return bad("evaluation batch must be positive");
        }
        Ok(())
    }
}

/// Outcome of training and scoring one candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitnessResult {
    /// Validation recall@k; 0 for rejected candidates.
    pub fitness: f64,
    /// Held-out test recall@k, never used for selection.
    pub test_recall: Option<f64>,
    /// Training loss of every step.
    pub train_loss_curve: Vec<f64>,
    pub wall_time: f64,
    pub rejected: Option<String>,
    pub steps_run: usize,
    pub parameter_count: u64,
    /// A smoothed loss window rose above the one before it.
    pub loss_increase_flagged: bool,
}

/// Equality ignores `wall_time`.
impl PartialEq for FitnessResult {
    fn eq(&self, o: &Self) -> bool {
        self.fitness == o.fitness
            && self.test_recall == o.test_recall
            && self.train_loss_curve == o.train_loss_curve
            && self.rejected == o.rejected
            && self.steps_run == o.steps_run
            && self.parameter_count == o.parameter_count
            && self.loss_increase_flagged == o.loss_increase_flagged
    }
}

impl FitnessResult {
    pub fn rejected(reason: impl Into<String>, parameter_count: u64, wall_time: f64) -> Self {
        FitnessResult {
            fitness: 0.0,
            test_recall: None,
            train_loss_curve: Vec::new(),
            wall_time,
            rejected: Some(reason.into()),
            steps_run: 0,
            parameter_count,
            loss_increase_flagged: false,
        }
    }

    pub fn is_rejected(&self) -> bool {
        self.rejected.is_some()
    }
}

/// Whether the mean loss of any full window exceeds the mean of the
/// window before it.
pub fn loss_increase(losses: &[f64], window: usize) -> bool {
    if window == 0 {
        return false;
    }
    let means: Vec<f64> = losses.chunks_exact(window).map(|w| w.iter().sum::<f64>() / window as f64).collect();
    means.windows(2).any(|p| p[1] > p[0])
}

/// A trained model with its graph.
pub struct Trained<T> {
    pub graph: ComputationGraph,
    pub store: ParameterStore<T>,
    pub losses: Vec<f64>,
    pub diverged: bool,
}

/// Trains `graph` on the training split with Adam and the configured
/// schedule. Stops at the first non-finite loss.
pub fn train_graph<T: Scalar>(graph: ComputationGraph, model: &ModelConfig, ds: &Dataset, cfg: &TrainConfig) -> Result<Trained<T>> {
    cfg.check()?;
    if ds.train.is_empty() {
        return Err(Error::InvalidArgument("empty training split".into()));
    }
    let mut store = init_model::<T>(&graph, model, DataShape::of(&ds.spec), cfg.seed)?;
    let mut adam = Adam::new(&store);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = Vec::new();
    let mut losses = Vec::with_capacity(cfg.steps);
    let batch = cfg.batch_size.min(ds.train.len());
    for step in 0..cfg.steps {
        if order.len() < batch {
            let mut epoch: Vec<usize> = (0..ds.train.len()).collect();
            epoch.shuffle(&mut rng);
            order.extend(epoch);
        }
        let idx: Vec<usize> = order.drain(..batch).collect();
        let examples: Vec<&Example> = idx.iter().map(|&i| &ds.train[i]).collect();
        let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();

        let mut tape = Tape::new();
        let pass = model_forward(&graph, model, &mut store, &mut tape, &examples, Mode::Train)?;
        let loss = tape.softmax_cross_entropy(pass.logits, &labels)?;
        let value = tape.value(loss).data()[0].as_f64();
        losses.push(value);
        if !value.is_finite() {
            return Ok(Trained { graph, store, losses, diverged: true });
        }
        let grads = tape.backward(loss)?;
        store.zero_grad();
        for &(id, var) in &pass.params {
            if let Some(g) = grads.wrt(var) {
                store.accumulate_grad(id, g);
            }
        }
        adam.step(&mut store, lr_at(cfg.schedule, cfg.peak_lr, cfg.steps, step)?);
        if !store.all_finite() {
            return Ok(Trained { graph, store, losses, diverged: true });
        }
    }
    Ok(Trained { graph, store, losses, diverged: false })
}

/// Recall@k of a trained model on `examples`.
pub fn score<T: Scalar>(trained: &mut Trained<T>, model: &ModelConfig, examples: &[Example], cfg: &TrainConfig) -> Result<f64> {
    let logits = predict(&trained.graph, model, &mut trained.store, examples, cfg.eval_batch)?;
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    recall_at_k(&logits, &labels, cfg.recall_k)
}

/// Compiles, budgets, trains and scores a genome, keeping the trained
/// model when training ran.
pub fn train_candidate<T: Scalar>(
    genome: &Genome,
    vocab: &Vocabulary,
    ds: &Dataset,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(FitnessResult, Option<Trained<T>>)> {
    cfg.check()?;
    let start = Instant::now();
    let elapsed = || start.elapsed().as_secs_f64();
    if genome.num_modalities() != model.graph_modalities() {
        return Err(Error::InvalidArgument(format!(
            "genome has {} modalities, routing needs {}",
            genome.num_modalities(),
            model.graph_modalities()
        )));
    }
    let opts = CompileOptions { max_width: cfg.max_width };
    let graph = match compile(genome, vocab, &model.graph_widths(), ds.spec.seq_len, &opts) {
        Ok(g) => g,
        Err(e) => return Ok((FitnessResult::rejected(format!("compile: {e}"), 0, elapsed()), None)),
    };
    let count = graph.parameter_count;
    if let BudgetDecision::Reject { count, budget } = enforce_budget(&graph, cfg.param_budget) {
        let reason = format!("over budget: {count} parameters > {budget}");
        return Ok((FitnessResult::rejected(reason, count, elapsed()), None));
    }
    let mut trained = train_graph::<T>(graph, model, ds, cfg)?;
    let steps_run = trained.losses.len();
    if trained.diverged {
        let mut r = FitnessResult::rejected("diverged", count, elapsed());
        r.steps_run = steps_run;
        r.train_loss_curve = std::mem::take(&mut trained.losses);
        return Ok((r, None));
    }
    let fitness = score(&mut trained, model, &ds.validation, cfg)?;
    let test_recall = if ds.test.is_empty() { None } else { Some(score(&mut trained, model, &ds.test, cfg)?) };
    let result = FitnessResult {
        fitness,
        test_recall,
        loss_increase_flagged: loss_increase(&trained.losses, LOSS_WINDOW),
        train_loss_curve: trained.losses.clone(),
        wall_time: elapsed(),
        rejected: None,
        steps_run,
        parameter_count: count,
    };
    Ok((result, Some(trained)))
}

/// [`train_candidate`] at the configured precision, discarding the model.
pub fn evaluate_candidate(
    genome: &Genome,
    vocab: &Vocabulary,
    ds: &Dataset,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<FitnessResult> {
    Ok(match cfg.precision {
        Precision::F32 => train_candidate::<f32>(genome, vocab, ds, model, cfg)?.0,
        Precision::F64 => train_candidate::<f64>(genome, vocab, ds, model, cfg)?.0,
    })
}
