//! The outer training loop.
//!
//! Step 1 trains both networks on full information (all channels, fully
//! per-sample scores) and derives the first population score. Every later
//! step walks four phases: joint optimization at a fixed score blend,
//! score annealing down to the population score, mask annealing onto the
//! next binary channel subset, and task-only refinement under early
//! stopping. Networks warm-start across steps; the retained checkpoint of
//! each step is the best-validation epoch of its refinement phase.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::masking::{self, MaskState};
use crate::nn::{AdamState, DenseNet};
use crate::scoring;
use crate::trainer::{
    joint_loss, save_run_metrics, score_alpha_after, train_batch, Batch, JointContext, Schedule,
    StepArtifact, StepMetrics,
};
use crate::{Real, RealMatrix, RealNet};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

const EVAL_CHUNK: usize = 8192;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NetConfig {
    pub hidden_layers: usize,
    pub units: usize,
}

impl NetConfig {
    pub fn dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(self.units, self.hidden_layers));
        dims.push(output);
        dims
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub schedule: Schedule,
    pub scoring_net: NetConfig,
    pub task_net: NetConfig,
    /// False bypasses the scoring network with constant unit scores.
    pub use_scoring_net: bool,
    /// Evaluate test MSE per step (off the training path).
    pub eval_test: bool,
    /// When set, artifacts and metrics are persisted here as steps finish.
    pub run_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    FullInformation,
    Joint,
    ScoreAnneal,
    MaskAnneal,
    Refine,
}

/// Snapshot emitted to the per-epoch hook, mainly for invariant checks and
/// progress logging.
pub struct EpochEvent<'a> {
    pub step_index: usize,
    pub epoch: usize,
    pub phase: Phase,
    pub score_alpha: f64,
    pub mask_alpha: f64,
    pub mask: &'a [Real],
    pub train_loss: f64,
    pub val_loss: f64,
    pub scoring_fingerprint: u64,
    pub task_fingerprint: u64,
}

pub struct Trainer<'a> {
    dataset: &'a Dataset,
    config: &'a TrainConfig,
    scoring: RealNet,
    scoring_opt: AdamState<Real>,
    task: RealNet,
    task_opt: AdamState<Real>,
    mask_state: MaskState<Real>,
    population_score: Vec<Real>,
    score_alpha: f64,
    /// f64 mirror of the mask interpolation weight (the mask state itself
    /// runs on the production scalar).
    mask_alpha: f64,
    rng: StdRng,
}

impl<'a> Trainer<'a> {
    pub fn new(dataset: &'a Dataset, config: &'a TrainConfig) -> Result<Self> {
        let channels = dataset.channels();
        config.schedule.validate(channels)?;
        let (_, fill) = dataset.require_prepared()?;
        if dataset.split.train.is_empty() {
            return Err(Error::config("training split is empty"));
        }
        if dataset.split.val.is_empty() {
            return Err(Error::config("validation split is empty (needed for early stopping)"));
        }

        let mut rng = StdRng::seed_from_u64(config.schedule.seed);
        let scoring = DenseNet::new(
            &config.scoring_net.dims(channels, channels),
            crate::nn::Activation::TwoSigmoid,
            &mut rng,
        )?;
        let task = DenseNet::new(
            &config.task_net.dims(channels, dataset.targets()),
            crate::nn::Activation::Identity,
            &mut rng,
        )?;
        let scoring_opt = AdamState::new(&scoring, config.schedule.learning_rate);
        let task_opt = AdamState::new(&task, config.schedule.learning_rate);

        Ok(Trainer {
            dataset,
            config,
            scoring,
            scoring_opt,
            task,
            task_opt,
            mask_state: MaskState::full(fill.to_vec()),
            population_score: vec![1.0; channels],
            score_alpha: 1.0,
            mask_alpha: 0.0,
            rng,
        })
    }

    pub fn task_net(&self) -> &RealNet {
        &self.task
    }

    pub fn scoring_net(&self) -> &RealNet {
        &self.scoring
    }

    /// Runs every step of the schedule, persisting artifacts and metrics as
    /// they complete when a run directory is configured.
    pub fn run(&mut self, hook: &mut dyn FnMut(&EpochEvent)) -> Result<Vec<StepArtifact>> {
        if let Some(dir) = &self.config.run_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(
                dir.join("train_config.json"),
                serde_json::to_string_pretty(self.config)?,
            )?;
        }
        let mut artifacts: Vec<StepArtifact> = Vec::new();
        let mut metrics: Vec<StepMetrics> = Vec::new();
        for t in 1..=self.config.schedule.steps() {
            let artifact = if t == 1 {
                self.run_initial_step(hook)?
            } else {
                self.run_elimination_step(t, hook)?
            };
            metrics.push(StepMetrics {
                step: t,
                c: artifact.c_t,
                train_mse: Some(self.eval_loss(&self.dataset.split.train, 0.0)?),
                val_mse: artifact.best_val_loss,
                test_mse: artifact.test_mse,
                epochs: artifact.epochs_run,
                wall_time_secs: artifact.wall_time_secs,
            });
            if let Some(dir) = &self.config.run_dir {
                artifact.save(&dir.join(format!("step_{t}")))?;
                save_run_metrics(dir, &metrics)?;
            }
            artifacts.push(artifact);
        }
        Ok(artifacts)
    }

    /// Step 1: full-information training with fully per-sample scores,
    /// governed by early stopping from the first epoch.
    pub fn run_initial_step(&mut self, hook: &mut dyn FnMut(&EpochEvent)) -> Result<StepArtifact> {
        let started = Instant::now();
        self.score_alpha = 1.0;
        let mut val_history: Vec<(usize, f64)> = Vec::new();
        let mut best = f64::INFINITY;
        let mut best_nets: Option<(RealNet, RealNet)> = None;
        let mut epoch = 0usize;
        loop {
            epoch += 1;
            let train_loss = self.train_epoch(1, epoch)?;
            let val_loss = self.eval_loss(&self.dataset.split.val, self.score_alpha)?;
            val_history.push((epoch, val_loss));
            if val_loss < best {
                best = val_loss;
                best_nets = Some((self.scoring.clone(), self.task.clone()));
            }
            self.emit(hook, 1, epoch, Phase::FullInformation, train_loss, val_loss);
            if early_stop(&val_history, self.config.schedule.patience) {
                break;
            }
        }
        let (s, t) = best_nets.expect("at least one epoch ran");
        self.scoring = s;
        self.task = t;
        self.population_score = self.score_mean_full_pass()?;
        self.finish_step(1, self.config.schedule.c_list[0], val_history, best, epoch, started)
    }

    /// Steps t >= 2: joint optimization, score annealing, selection, mask
    /// annealing, then task-only refinement until early stopping.
    pub fn run_elimination_step(
        &mut self,
        t: usize,
        hook: &mut dyn FnMut(&EpochEvent),
    ) -> Result<StepArtifact> {
        if t < 2 || t > self.config.schedule.steps() {
            return Err(Error::config(format!("step index {t} out of range")));
        }
        let c_prev = self.config.schedule.c_list[t - 2];
        let c_t = self.config.schedule.c_list[t - 1];
        self.eliminate(t, c_prev, c_t, hook)
    }

    fn eliminate(
        &mut self,
        t: usize,
        c_prev: usize,
        c_t: usize,
        hook: &mut dyn FnMut(&EpochEvent),
    ) -> Result<StepArtifact> {
        let started = Instant::now();
        let (e1, e2, e3) = (
            self.config.schedule.e1,
            self.config.schedule.e2,
            self.config.schedule.e3,
        );
        let mut val_history: Vec<(usize, f64)> = Vec::new();
        let prev_population = self.population_score.clone();

        // Joint optimization at a fixed half-half blend of per-sample and
        // previous population scores.
        self.score_alpha = 0.5;
        for epoch in 1..=e1 {
            let train_loss = self.train_epoch(t, epoch)?;
            let val_loss = self.eval_loss(&self.dataset.split.val, self.score_alpha)?;
            val_history.push((epoch, val_loss));
            self.emit(hook, t, epoch, Phase::Joint, train_loss, val_loss);
        }

        // New population score: average of the previous one and the fresh
        // per-sample mean over the training data.
        let sample_mean = self.score_mean_full_pass()?;
        self.population_score = scoring::update_global(&prev_population, &sample_mean);

        // Anneal the blend weight to zero; training becomes fully
        // population-scored.
        for epoch in (e1 + 1)..=e2 {
            self.score_alpha = score_alpha_after(epoch - e1, e1, e2);
            let train_loss = self.train_epoch(t, epoch)?;
            let val_loss = self.eval_loss(&self.dataset.split.val, self.score_alpha)?;
            val_history.push((epoch, val_loss));
            self.emit(hook, t, epoch, Phase::ScoreAnneal, train_loss, val_loss);
        }

        // Select the lowest-scored active channels and anneal the mask onto
        // the shrunken subset.
        let drop = masking::select_drop_set(
            &self.population_score,
            &self.mask_state.current,
            c_prev - c_t,
        )?;
        let target = masking::mask_target(&self.mask_state.current, &drop);
        self.mask_state.set_target(target);
        self.mask_alpha = 1.0;
        for epoch in (e2 + 1)..=e3 {
            masking::anneal_mask(&mut self.mask_state, e2, e3)?;
            let k = epoch - e2;
            self.mask_alpha = if k >= e3 - e2 {
                0.0
            } else {
                ((e3 - e2 - k) as f64) / ((e3 - e2) as f64)
            };
            debug_assert_eq!(self.mask_alpha as Real, self.mask_state.alpha);
            let train_loss = self.train_epoch(t, epoch)?;
            let val_loss = self.eval_loss(&self.dataset.split.val, self.score_alpha)?;
            val_history.push((epoch, val_loss));
            self.emit(hook, t, epoch, Phase::MaskAnneal, train_loss, val_loss);
        }
        debug_assert!(self.mask_state.current_is_binary());

        // Task-only refinement; early stopping is armed only here, so the
        // stopping decision always compares binary-mask epochs.
        let mut armed: Vec<(usize, f64)> = Vec::new();
        let mut best = f64::INFINITY;
        let mut best_nets: Option<(RealNet, RealNet)> = None;
        let mut epoch = e3;
        loop {
            epoch += 1;
            let train_loss = self.train_epoch(t, epoch)?;
            let val_loss = self.eval_loss(&self.dataset.split.val, self.score_alpha)?;
            val_history.push((epoch, val_loss));
            armed.push((epoch, val_loss));
            if val_loss < best {
                best = val_loss;
                best_nets = Some((self.scoring.clone(), self.task.clone()));
            }
            self.emit(hook, t, epoch, Phase::Refine, train_loss, val_loss);
            if early_stop(&armed, self.config.schedule.patience) {
                break;
            }
        }
        let (s, task) = best_nets.expect("refinement ran at least one epoch");
        self.scoring = s;
        self.task = task;

        self.finish_step(t, c_t, val_history, best, epoch, started)
    }

    fn finish_step(
        &mut self,
        t: usize,
        c_t: usize,
        val_history: Vec<(usize, f64)>,
        best_val_loss: f64,
        epochs_run: usize,
        started: Instant,
    ) -> Result<StepArtifact> {
        let mask: Vec<u8> = self
            .mask_state
            .current
            .iter()
            .map(|&m| if m == 1.0 { 1 } else { 0 })
            .collect();
        let test_mse = if self.config.eval_test && !self.dataset.split.test.is_empty() {
            Some(self.eval_loss(&self.dataset.split.test, 0.0)?)
        } else {
            None
        };
        let artifact = StepArtifact {
            step_index: t,
            c_t,
            mask,
            population_score: self.population_score.clone(),
            task_net: self.task.clone(),
            fill: self.mask_state.fill.clone(),
            val_history,
            best_val_loss,
            epochs_run,
            test_mse,
            wall_time_secs: started.elapsed().as_secs_f64(),
        };
        debug_assert_eq!(artifact.cardinality(), c_t);
        Ok(artifact)
    }

    /// One pass over the shuffled training split; returns the mean training
    /// loss. Batch order reshuffles every epoch from the run RNG; the last
    /// partial batch is kept.
    fn train_epoch(&mut self, step: usize, epoch: usize) -> Result<f64> {
        let mut order = self.dataset.split.train.clone();
        order.shuffle(&mut self.rng);
        let alpha = self.score_alpha as Real;
        let mut total = 0.0f64;
        let mut rows = 0usize;
        for (batch_index, chunk) in order.chunks(self.config.schedule.batch_size).enumerate() {
            let batch = Batch::new(
                Matrix::gather_rows(&self.dataset.x, chunk),
                Matrix::gather_rows(&self.dataset.y, chunk),
                chunk.to_vec(),
            )?;
            let ctx = JointContext {
                population_score: &self.population_score,
                score_alpha: alpha,
                mask: &self.mask_state.current,
                fill: &self.mask_state.fill,
                use_scoring: self.config.use_scoring_net,
            };
            let out = train_batch(
                &mut self.scoring,
                &mut self.scoring_opt,
                &mut self.task,
                &mut self.task_opt,
                &batch,
                &ctx,
            )
            .map_err(|e| abort(e, step, epoch, batch_index))?;
            total += out.loss * chunk.len() as f64;
            rows += chunk.len();
        }
        Ok(total / rows as f64)
    }

    /// Loss over an index set with the current networks, mask, and
    /// population score, at the given blend weight. `alpha = 0` is the
    /// inference path.
    fn eval_loss(&self, indices: &[usize], alpha: f64) -> Result<f64> {
        if indices.is_empty() {
            return Err(Error::config("cannot evaluate on an empty split"));
        }
        let alpha = alpha as Real;
        let mut sum = 0.0f64;
        let mut rows = 0usize;
        for chunk in indices.chunks(EVAL_CHUNK) {
            let batch = Batch::new(
                Matrix::gather_rows(&self.dataset.x, chunk),
                Matrix::gather_rows(&self.dataset.y, chunk),
                chunk.to_vec(),
            )?;
            let ctx = JointContext {
                population_score: &self.population_score,
                score_alpha: alpha,
                mask: &self.mask_state.current,
                fill: &self.mask_state.fill,
                use_scoring: self.config.use_scoring_net,
            };
            let loss = joint_loss(&self.scoring, &self.task, &batch, &ctx)?;
            sum += loss * chunk.len() as f64;
            rows += chunk.len();
        }
        Ok(sum / rows as f64)
    }

    /// Mean per-sample score over the full training split, computed with
    /// frozen networks in a dedicated pass. Constant one under the
    /// scoring-network ablation.
    fn score_mean_full_pass(&self) -> Result<Vec<Real>> {
        let channels = self.dataset.channels();
        if !self.config.use_scoring_net {
            return Ok(vec![1.0; channels]);
        }
        let mut mean = scoring::RunningMean::new(channels);
        for chunk in self.dataset.split.train.chunks(EVAL_CHUNK) {
            let inputs = Matrix::gather_rows(&self.dataset.x, chunk);
            let scores = scoring::sample_scores(&self.scoring, &inputs)?;
            mean.accumulate(&scores)?;
        }
        Ok(mean.mean()?.into_iter().map(|v| v as Real).collect())
    }

    fn emit(
        &self,
        hook: &mut dyn FnMut(&EpochEvent),
        step_index: usize,
        epoch: usize,
        phase: Phase,
        train_loss: f64,
        val_loss: f64,
    ) {
        hook(&EpochEvent {
            step_index,
            epoch,
            phase,
            score_alpha: self.score_alpha,
            mask_alpha: self.mask_alpha,
            mask: &self.mask_state.current,
            train_loss,
            val_loss,
            scoring_fingerprint: self.scoring.param_fingerprint(),
            task_fingerprint: self.task.param_fingerprint(),
        });
    }
}

fn abort(e: Error, step: usize, epoch: usize, batch: usize) -> Error {
    match e {
        Error::TrainingAbort { .. } => e,
        other => Error::TrainingAbort {
            step,
            epoch,
            batch,
            detail: other.to_string(),
        },
    }
}

/// Runs the full schedule and returns one artifact per step.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<Vec<StepArtifact>> {
    train_with_hook(dataset, config, &mut |_| {})
}

pub fn train_with_hook(
    dataset: &Dataset,
    config: &TrainConfig,
    hook: &mut dyn FnMut(&EpochEvent),
) -> Result<Vec<StepArtifact>> {
    Trainer::new(dataset, config)?.run(hook)
}

/// Inference with a step artifact: inactive channels are overwritten by the
/// artifact's fill values (their incoming contents are irrelevant), inputs
/// are weighted by the population score, and the task network predicts.
pub fn infer(artifact: &StepArtifact, inputs: &RealMatrix) -> Result<RealMatrix> {
    if inputs.cols() != artifact.mask.len() {
        return Err(Error::shape(
            "infer inputs",
            format!("{} columns", artifact.mask.len()),
            format!("{} columns", inputs.cols()),
        ));
    }
    let mask: Vec<Real> = artifact.mask.iter().map(|&m| m as Real).collect();
    let state = MaskState::frozen(mask, artifact.fill.clone());
    let x = masking::apply_mask(inputs, &state)?;
    let mut z = Matrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        let src = x.row(r);
        let dst = z.row_mut(r);
        for (c, d) in dst.iter_mut().enumerate() {
            *d = src[c] * artifact.population_score[c];
        }
    }
    artifact.task_net.predict(&z)
}

/// True once the best validation loss has not strictly improved for
/// `patience` consecutive epochs.
pub fn early_stop(val_history: &[(usize, f64)], patience: usize) -> bool {
    if val_history.is_empty() {
        return false;
    }
    let mut best = f64::INFINITY;
    let mut best_index = 0usize;
    for (i, &(_, loss)) in val_history.iter().enumerate() {
        if loss < best {
            best = loss;
            best_index = i;
        }
    }
    val_history.len() - 1 - best_index >= patience
}
