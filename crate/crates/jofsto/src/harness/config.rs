//! Experiment configuration. Values resolve with precedence
//! CLI flags > config file > defaults; the merged snapshot is written into
//! the output directory before any training starts.

use crate::baselines::BaselineConfig;
use crate::error::{Error, Result};
use crate::trainer::{NetConfig, Schedule, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Method {
    Jofsto,
    RandomFs,
}

impl Method {
    pub fn label(self, ablation: Option<Ablation>) -> String {
        match self {
            Method::RandomFs => "random_fs".into(),
            Method::Jofsto => match ablation {
                None => "jofsto".into(),
                Some(Ablation::NoRfe) => "jofsto_no_rfe".into(),
                Some(Ablation::NoScoringNet) => "jofsto_no_scoring_net".into(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Ablation {
    /// Skip the stepwise ladder: eliminate straight from the full set to
    /// the final budget in a single elimination step.
    NoRfe,
    /// Replace learned per-sample scores with a constant one.
    NoScoringNet,
}

/// Dataset generation settings for `simulate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub c_bar: usize,
    pub snr: f64,
    pub seed: u64,
    /// Channels whose values are permuted across samples to make them
    /// target-independent (empty for the standard dataset).
    #[serde(default)]
    pub noise_channels: Vec<usize>,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            n_train: 20_000,
            n_val: 2_000,
            n_test: 2_000,
            c_bar: 64,
            snr: crate::data::DEFAULT_SNR,
            seed: 7,
            noise_channels: crate::data::default_corrupted_channels(64),
        }
    }
}

impl SimulateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_train + self.n_val + self.n_test == 0 {
            return Err(Error::config("cannot simulate zero samples"));
        }
        if self.c_bar < 2 {
            return Err(Error::config("need at least 2 channels"));
        }
        if self.snr.is_nan() || self.snr <= 0.0 {
            return Err(Error::config("snr must be positive"));
        }
        if self.noise_channels.iter().any(|&c| c >= self.c_bar) {
            return Err(Error::config("noise channel out of range"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Channel-budget ladder; empty means the halving ladder
    /// down to C/16 derived from the dataset.
    pub c_list: Vec<usize>,
    pub e1: usize,
    pub e2: usize,
    pub e3: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_layers: usize,
    pub units: usize,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub ablation: Option<Ablation>,
    pub eval_test: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let schedule = Schedule::default();
        ExperimentConfig {
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("runs/experiment"),
            c_list: Vec::new(),
            e1: schedule.e1,
            e2: schedule.e2,
            e3: schedule.e3,
            patience: schedule.patience,
            batch_size: schedule.batch_size,
            learning_rate: schedule.learning_rate,
            hidden_layers: 1,
            units: 100,
            methods: vec![Method::Jofsto],
            seeds: vec![0],
            ablation: None,
            eval_test: true,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// The budget ladder actually run: the configured (or default halving)
    /// ladder, collapsed to two entries under the no-RFE ablation.
    pub fn effective_c_list(&self, c_bar: usize) -> Vec<usize> {
        let base = if self.c_list.is_empty() {
            let mut list = vec![c_bar];
            for div in [2usize, 4, 8, 16] {
                let c = c_bar / div;
                if c >= 1 && c < *list.last().unwrap() {
                    list.push(c);
                }
            }
            list
        } else {
            self.c_list.clone()
        };
        if self.ablation == Some(Ablation::NoRfe) && base.len() > 2 {
            vec![base[0], *base.last().unwrap()]
        } else {
            base
        }
    }

    pub fn validate(&self, c_bar: usize) -> Result<()> {
        self.schedule(c_bar, 0).validate(c_bar)?;
        if !(1..=3).contains(&self.hidden_layers) {
            return Err(Error::config(format!(
                "hidden layer count must be 1, 2, or 3, got {}",
                self.hidden_layers
            )));
        }
        if self.units == 0 {
            return Err(Error::config("hidden units must be positive"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("at least one method must be configured"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed must be configured"));
        }
        Ok(())
    }

    pub fn schedule(&self, c_bar: usize, seed: u64) -> Schedule {
        Schedule {
            c_list: self.effective_c_list(c_bar),
            e1: self.e1,
            e2: self.e2,
            e3: self.e3,
            patience: self.patience,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed,
        }
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            hidden_layers: self.hidden_layers,
            units: self.units,
        }
    }

    pub fn train_config(&self, c_bar: usize, seed: u64, run_dir: PathBuf) -> TrainConfig {
        TrainConfig {
            schedule: self.schedule(c_bar, seed),
            scoring_net: self.net_config(),
            task_net: self.net_config(),
            use_scoring_net: self.ablation != Some(Ablation::NoScoringNet),
            eval_test: self.eval_test,
            run_dir: Some(run_dir),
        }
    }

    pub fn baseline_config(&self, seed: u64) -> BaselineConfig {
        BaselineConfig {
            net: self.net_config(),
            patience: self.patience,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed,
            eval_test: self.eval_test,
        }
    }
}
