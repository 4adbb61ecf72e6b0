//! Elimination schedule: the channel-budget ladder and the epoch boundaries
//! of the four phases within a step.
//!
//! Within a step, epochs `1..=e1` train jointly at a fixed score blend of
//! 1/2, epochs `e1+1..=e2` anneal the blend to 0, epochs `e2+1..=e3` anneal
//! the mask onto the new binary target, and epochs beyond `e3` refine the
//! task network until early stopping.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_E1: usize = 25;
pub const DEFAULT_E2: usize = 35;
pub const DEFAULT_E3: usize = 45;
pub const DEFAULT_PATIENCE: usize = 10;
pub const DEFAULT_BATCH_SIZE: usize = 1500;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Schedule {
    /// Channel budgets per step, starting at the full channel count and
    /// strictly decreasing.
    pub c_list: Vec<usize>,
    /// Last epoch of the joint-optimization phase.
    pub e1: usize,
    /// Last epoch of the score-annealing phase.
    pub e2: usize,
    /// Last epoch of the mask-annealing phase.
    pub e3: usize,
    /// Early-stopping patience (epochs without validation improvement).
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            c_list: Vec::new(),
            e1: DEFAULT_E1,
            e2: DEFAULT_E2,
            e3: DEFAULT_E3,
            patience: DEFAULT_PATIENCE,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: crate::nn::DEFAULT_LEARNING_RATE,
            seed: 0,
        }
    }
}

impl Schedule {
    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.c_list.is_empty() {
            return Err(Error::config("c_list must not be empty"));
        }
        if self.c_list[0] != channels {
            return Err(Error::config(format!(
                "c_list must start at the full channel count {channels}, got {}",
                self.c_list[0]
            )));
        }
        for w in self.c_list.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::config(format!(
                    "c_list must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if *self.c_list.last().unwrap() == 0 {
            return Err(Error::config("channel budgets must stay positive"));
        }
        if !(1 <= self.e1 && self.e1 < self.e2 && self.e2 < self.e3) {
            return Err(Error::config(format!(
                "epoch boundaries must satisfy 1 <= e1 < e2 < e3, got {}/{}/{}",
                self.e1, self.e2, self.e3
            )));
        }
        if self.patience == 0 {
            return Err(Error::config("patience must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive and finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.c_list.len()
    }
}

/// Score blend weight after `k` annealing epochs, starting from 1/2 and
/// dropping by `2/(e2-e1)` per epoch:
/// `max(1/2 - 2k/(e2-e1), 0) = max((w - 4k) / 2w, 0)` with `w = e2 - e1`.
///
/// Evaluated in closed form so the weight is exactly zero once
/// `k >= ceil(w/4)`; repeated f64 subtraction can leave ~1e-16 residue for
/// some window lengths, which would break the exact gradient-blocking
/// guarantee downstream.
pub fn score_alpha_after(k: usize, e1: usize, e2: usize) -> f64 {
    assert!(e2 > e1, "annealing window requires e2 > e1");
    let window = e2 - e1;
    if 4 * k >= window {
        0.0
    } else {
        (window - 4 * k) as f64 / (2 * window) as f64
    }
}
