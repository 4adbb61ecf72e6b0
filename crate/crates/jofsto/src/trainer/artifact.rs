//! Step artifacts: the deliverable of each elimination step, and their
//! on-disk layout inside a run directory.
//!
//! ```text
//! run_dir/
//!   config.json          written before any training
//!   step_<t>/
//!     mask.txt           index<TAB>0|1 per channel
//!     scores.txt         index<TAB>score per channel
//!     task.jfnn          task network checkpoint
//!     meta.json          histories, fill, losses, timings
//!   metrics.json         one row per step
//! ```

use crate::error::{Error, Result};
use crate::masking;
use crate::nn::{load_checkpoint, save_checkpoint};
use crate::scoring;
use crate::{Real, RealNet};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct StepArtifact {
    pub step_index: usize,
    pub c_t: usize,
    /// Binary channel mask, one entry per channel.
    pub mask: Vec<u8>,
    /// Population score the selection was ranked by; also the inference
    /// input weighting.
    pub population_score: Vec<Real>,
    pub task_net: RealNet,
    /// Per-channel fill constants (training medians), kept so an artifact
    /// is self-contained for inference.
    pub fill: Vec<Real>,
    /// (epoch, validation loss) for every epoch of the step.
    pub val_history: Vec<(usize, f64)>,
    /// Validation loss of the retained (best) checkpoint.
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub test_mse: Option<f64>,
    pub wall_time_secs: f64,
}

impl StepArtifact {
    pub fn cardinality(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&c| self.mask[c] == 1).collect()
    }

    pub fn save(&self, step_dir: &Path) -> Result<()> {
        fs::create_dir_all(step_dir)?;
        masking::write_mask(&step_dir.join("mask.txt"), &self.mask)?;
        scoring::write_scores(&step_dir.join("scores.txt"), &self.population_score)?;
        save_checkpoint(&self.task_net, &step_dir.join("task.jfnn"))?;
        let meta = ArtifactMeta {
            step_index: self.step_index,
            c_t: self.c_t,
            fill: self.fill.clone(),
            val_history: self.val_history.clone(),
            best_val_loss: self.best_val_loss,
            epochs_run: self.epochs_run,
            test_mse: self.test_mse,
            wall_time_secs: self.wall_time_secs,
        };
        fs::write(step_dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(step_dir: &Path) -> Result<Self> {
        let meta: ArtifactMeta =
            serde_json::from_str(&fs::read_to_string(step_dir.join("meta.json"))?)?;
        let mask = masking::read_mask(&step_dir.join("mask.txt"))?;
        let population_score = scoring::read_scores(&step_dir.join("scores.txt"))?;
        let task_net = load_checkpoint(&step_dir.join("task.jfnn"))?;
        if mask.len() != population_score.len() || mask.len() != meta.fill.len() {
            return Err(Error::config(format!(
                "artifact in {} has inconsistent channel counts",
                step_dir.display()
            )));
        }
        Ok(StepArtifact {
            step_index: meta.step_index,
            c_t: meta.c_t,
            mask,
            population_score,
            task_net,
            fill: meta.fill,
            val_history: meta.val_history,
            best_val_loss: meta.best_val_loss,
            epochs_run: meta.epochs_run,
            test_mse: meta.test_mse,
            wall_time_secs: meta.wall_time_secs,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ArtifactMeta {
    step_index: usize,
    c_t: usize,
    fill: Vec<Real>,
    val_history: Vec<(usize, f64)>,
    best_val_loss: f64,
    epochs_run: usize,
    test_mse: Option<f64>,
    wall_time_secs: f64,
}

/// One row of `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub c: usize,
    pub train_mse: Option<f64>,
    pub val_mse: f64,
    pub test_mse: Option<f64>,
    pub epochs: usize,
    pub wall_time_secs: f64,
}

pub fn save_run_metrics(run_dir: &Path, metrics: &[StepMetrics]) -> Result<()> {
    fs::write(
        run_dir.join("metrics.json"),
        serde_json::to_string_pretty(metrics)?,
    )?;
    Ok(())
}

pub fn load_run_metrics(run_dir: &Path) -> Result<Vec<StepMetrics>> {
    Ok(serde_json::from_str(&fs::read_to_string(
        run_dir.join("metrics.json"),
    )?)?)
}
