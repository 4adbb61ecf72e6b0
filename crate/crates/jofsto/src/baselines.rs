//! Random feature selection + task training: the off-the-shelf comparator.
//! Selection draws a uniform channel subset; the task network then trains on
//! masked-and-filled inputs exactly like the main pipeline (same dataset
//! object, same fill, unit scores), isolating the selection mechanism as the
//! only difference.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::masking::MaskState;
use crate::nn::{AdamState, DenseNet};
use crate::trainer::{early_stop, joint_loss, train_batch, Batch, JointContext, NetConfig, StepArtifact};
use crate::{Real, RealNet};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub net: NetConfig,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub eval_test: bool,
}

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub selected: Vec<usize>,
    pub seed: u64,
    /// Trained checkpoint plus histories, in the same shape the main
    /// pipeline produces so downstream tooling is shared.
    pub artifact: StepArtifact,
}

impl BaselineResult {
    pub fn test_mse(&self) -> Option<f64> {
        self.artifact.test_mse
    }

    pub fn task_net(&self) -> &RealNet {
        &self.artifact.task_net
    }
}

/// Uniform sample of `c` distinct channel indices out of `c_bar`,
/// deterministic for a fixed seed. Returned sorted.
pub fn random_select(c_bar: usize, c: usize, seed: u64) -> Result<Vec<usize>> {
    if c == 0 || c > c_bar {
        return Err(Error::config(format!(
            "cannot select {c} channels out of {c_bar}"
        )));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..c_bar).collect();
    for i in 0..c {
        let j = rng.gen_range(i..c_bar);
        indices.swap(i, j);
    }
    let mut selected = indices[..c].to_vec();
    selected.sort_unstable();
    Ok(selected)
}

/// Trains a plain task network on the selected channels (all other channels
/// replaced by fill), with early stopping on validation loss from the first
/// epoch. The retained checkpoint is the best-validation epoch.
pub fn train_baseline(
    dataset: &Dataset,
    selected: &[usize],
    config: &BaselineConfig,
) -> Result<BaselineResult> {
    let channels = dataset.channels();
    let (_, fill) = dataset.require_prepared()?;
    if dataset.split.train.is_empty() || dataset.split.val.is_empty() {
        return Err(Error::config("baseline training needs train and val splits"));
    }
    let mut sorted = selected.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != selected.len() || sorted.iter().any(|&c| c >= channels) {
        return Err(Error::config("selected channels must be unique and in range"));
    }

    let started = Instant::now();
    let mut mask = vec![0.0 as Real; channels];
    for &c in &sorted {
        mask[c] = 1.0;
    }
    let mask_state = MaskState::frozen(mask, fill.to_vec());
    let population = vec![1.0 as Real; channels];

    let mut rng = StdRng::seed_from_u64(config.seed);
    let mut task = DenseNet::new(
        &config.net.dims(channels, dataset.targets()),
        crate::nn::Activation::Identity,
        &mut rng,
    )?;
    let mut task_opt = AdamState::new(&task, config.learning_rate);
    // Placeholder scorer; never consulted since use_scoring is false.
    let mut scorer = DenseNet::new(
        &[channels, channels],
        crate::nn::Activation::TwoSigmoid,
        &mut rng,
    )?;
    let mut scorer_opt = AdamState::new(&scorer, config.learning_rate);

    let eval = |task: &RealNet, scorer: &RealNet, indices: &[usize]| -> Result<f64> {
        let mut sum = 0.0;
        let mut rows = 0usize;
        for chunk in indices.chunks(8192) {
            let batch = Batch::new(
                Matrix::gather_rows(&dataset.x, chunk),
                Matrix::gather_rows(&dataset.y, chunk),
                chunk.to_vec(),
            )?;
            let ctx = JointContext {
                population_score: &population,
                score_alpha: 0.0,
                mask: &mask_state.current,
                fill: &mask_state.fill,
                use_scoring: false,
            };
            sum += joint_loss(scorer, task, &batch, &ctx)? * chunk.len() as f64;
            rows += chunk.len();
        }
        Ok(sum / rows as f64)
    };

    let mut val_history: Vec<(usize, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_net: Option<RealNet> = None;
    let mut epoch = 0usize;
    loop {
        epoch += 1;
        let mut order = dataset.split.train.clone();
        order.shuffle(&mut rng);
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = Batch::new(
                Matrix::gather_rows(&dataset.x, chunk),
                Matrix::gather_rows(&dataset.y, chunk),
                chunk.to_vec(),
            )?;
            let ctx = JointContext {
                population_score: &population,
                score_alpha: 0.0,
                mask: &mask_state.current,
                fill: &mask_state.fill,
                use_scoring: false,
            };
            train_batch(&mut scorer, &mut scorer_opt, &mut task, &mut task_opt, &batch, &ctx)
                .map_err(|e| Error::TrainingAbort {
                    step: 1,
                    epoch,
                    batch: batch_index,
                    detail: e.to_string(),
                })?;
        }
        let val_loss = eval(&task, &scorer, &dataset.split.val)?;
        val_history.push((epoch, val_loss));
        if val_loss < best {
            best = val_loss;
            best_net = Some(task.clone());
        }
        if early_stop(&val_history, config.patience) {
            break;
        }
    }
    let task = best_net.expect("at least one epoch ran");

    let test_mse = if config.eval_test && !dataset.split.test.is_empty() {
        Some(eval(&task, &scorer, &dataset.split.test)?)
    } else {
        None
    };

    let artifact = StepArtifact {
        step_index: 1,
        c_t: sorted.len(),
        mask: mask_state.current.iter().map(|&m| if m == 1.0 { 1 } else { 0 }).collect(),
        population_score: population,
        task_net: task,
        fill: mask_state.fill.clone(),
        val_history,
        best_val_loss: best,
        epochs_run: epoch,
        test_mse,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(BaselineResult { selected: sorted, seed: config.seed, artifact })
}
