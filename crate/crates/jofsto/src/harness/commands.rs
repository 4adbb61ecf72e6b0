//! The five commands behind the CLI. Each run directory is self-describing:
//! evaluation and reporting work from files alone.
//!
//! ```text
//! <data_dir>/              from `simulate` (or user-provided)
//!   x.jfmx y.jfmx scheme.csv splits.json sim.json
//! <output_dir>/            from `train`
//!   config.json            merged experiment config, written first
//!   <method>_seed<s>/
//!     run.json             method, seed, data_dir
//!     step_<t>/ | c_<C>/   artifacts (mask, scores, checkpoint, meta)
//!     metrics.json
//!     eval_<split>.json    from `evaluate`
//! ```

use crate::baselines::{random_select, train_baseline};
use crate::data::{
    self, load_matrix, load_scheme, load_split, save_matrix, save_scheme,
    save_split, write_design_subset, AcquisitionScheme, Dataset, SplitSpec,
};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Method, SimulateSpec};
use crate::linalg::Matrix;
use crate::metrics::{build_report, Report, RunSummary};
use crate::trainer::{self, StepArtifact, StepMetrics};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Generates a dataset and writes it to `out` in the standard layout.
pub fn cmd_simulate(spec: &SimulateSpec, out: &Path) -> Result<()> {
    spec.validate()?;
    let n = spec.n_train + spec.n_val + spec.n_test;
    let scheme = AcquisitionScheme::default_grid(spec.c_bar)?;
    let mut dataset = if spec.noise_channels.is_empty() {
        data::simulate(&scheme, n, spec.snr, spec.seed)?
    } else {
        data::simulate_with_noise_channels(&scheme, &spec.noise_channels, n, spec.snr, spec.seed)?
    };
    dataset.assign_split(
        SplitSpec::Counts(spec.n_train, spec.n_val, spec.n_test),
        spec.seed,
    )?;

    fs::create_dir_all(out)?;
    save_matrix(&out.join("x.jfmx"), &dataset.x)?;
    save_matrix(&out.join("y.jfmx"), &dataset.y)?;
    save_scheme(&out.join("scheme.csv"), &scheme)?;
    save_split(&out.join("splits.json"), &dataset.split)?;
    fs::write(out.join("sim.json"), serde_json::to_string_pretty(spec)?)?;
    Ok(())
}

/// Loads a dataset directory (raw values + splits) and runs the
/// normalization/fill pipeline.
pub fn load_dataset_dir(dir: &Path) -> Result<(Dataset, Option<AcquisitionScheme>)> {
    let x = load_matrix(&dir.join("x.jfmx"))?;
    let y = load_matrix(&dir.join("y.jfmx"))?;
    let mut dataset = Dataset::new(x, y)?;
    dataset.split = load_split(&dir.join("splits.json"))?;
    dataset.prepare()?;
    let scheme_path = dir.join("scheme.csv");
    let scheme = if scheme_path.exists() {
        Some(load_scheme(&scheme_path)?)
    } else {
        None
    };
    Ok((dataset, scheme))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunInfo {
    pub method: String,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub c_list: Vec<usize>,
}

/// Runs the configured method x seed matrix over the dataset. Returns the
/// subrun directories that were written.
pub fn cmd_train(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let (dataset, scheme) = load_dataset_dir(&config.data_dir)?;
    let c_bar = dataset.channels();
    config.validate(c_bar)?;

    fs::create_dir_all(&config.output_dir)?;
    fs::write(
        config.output_dir.join("config.json"),
        serde_json::to_string_pretty(config)?,
    )?;

    let c_list = config.effective_c_list(c_bar);
    let mut subruns = Vec::new();
    for &method in &config.methods {
        let label = method.label(config.ablation);
        for &seed in &config.seeds {
            let run_dir = config.output_dir.join(format!("{label}_seed{seed}"));
            fs::create_dir_all(&run_dir)?;
            let info = RunInfo {
                method: label.clone(),
                seed,
                data_dir: config.data_dir.clone(),
                c_list: c_list.clone(),
            };
            fs::write(run_dir.join("run.json"), serde_json::to_string_pretty(&info)?)?;
            match method {
                Method::Jofsto => {
                    let train_config = config.train_config(c_bar, seed, run_dir.clone());
                    let artifacts = trainer::train(&dataset, &train_config)?;
                    if let Some(scheme) = &scheme {
                        for artifact in &artifacts {
                            let dir = run_dir.join(format!("step_{}", artifact.step_index));
                            write_design_subset(&dir.join("a_subset.csv"), scheme, &artifact.mask)?;
                        }
                    }
                }
                Method::RandomFs => {
                    run_random_fs(&dataset, config, &c_list, seed, &run_dir, scheme.as_ref())?;
                }
            }
            subruns.push(run_dir);
        }
    }
    Ok(subruns)
}

fn run_random_fs(
    dataset: &Dataset,
    config: &ExperimentConfig,
    c_list: &[usize],
    seed: u64,
    run_dir: &Path,
    scheme: Option<&AcquisitionScheme>,
) -> Result<()> {
    let c_bar = dataset.channels();
    let mut metrics: Vec<StepMetrics> = Vec::new();
    for (i, &c) in c_list.iter().enumerate().skip(1) {
        // Independent draw per budget, deterministic in (seed, C).
        let draw_seed = crate::data::stream_rng_seed(seed, c as u64);
        let selected = random_select(c_bar, c, draw_seed)?;
        let result = train_baseline(dataset, &selected, &config.baseline_config(seed))?;
        let dir = run_dir.join(format!("c_{c}"));
        result.artifact.save(&dir)?;
        if let Some(scheme) = scheme {
            write_design_subset(&dir.join("a_subset.csv"), scheme, &result.artifact.mask)?;
        }
        metrics.push(StepMetrics {
            step: i,
            c,
            train_mse: None,
            val_mse: result.artifact.best_val_loss,
            test_mse: result.artifact.test_mse,
            epochs: result.artifact.epochs_run,
            wall_time_secs: result.artifact.wall_time_secs,
        });
    }
    trainer::save_run_metrics(run_dir, &metrics)?;
    Ok(())
}

/// Subrun directories under `dir` (or `dir` itself when it is one).
pub fn discover_subruns(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join("run.json").exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut subruns = Vec::new();
    if dir.is_dir() {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.join("run.json").exists() {
                subruns.push(path);
            }
        }
    }
    subruns.sort();
    if subruns.is_empty() {
        return Err(Error::config(format!(
            "{} contains no runs (no run.json found)",
            dir.display()
        )));
    }
    Ok(subruns)
}

fn artifact_dirs(subrun: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(subrun)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .map(|n| n.starts_with("step_") || n.starts_with("c_"))
                    .unwrap_or(false)
        })
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::config(format!(
            "{} holds no step artifacts",
            subrun.display()
        )));
    }
    Ok(dirs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub artifact: String,
    pub c: usize,
    pub mse: f64,
}

/// Re-evaluates every artifact of the run on the requested split, writing
/// `eval_<split>.json` next to the metrics. Pure function of the files.
pub fn cmd_evaluate(run_dir: &Path, split: &str, data_override: Option<&Path>) -> Result<()> {
    for subrun in discover_subruns(run_dir)? {
        let info: RunInfo = serde_json::from_str(&fs::read_to_string(subrun.join("run.json"))?)?;
        let data_dir = data_override.unwrap_or(&info.data_dir);
        let (dataset, _) = load_dataset_dir(data_dir)?;
        let indices = match split {
            "train" => &dataset.split.train,
            "val" => &dataset.split.val,
            "test" => &dataset.split.test,
            other => return Err(Error::config(format!("unknown split {other:?}"))),
        };
        if indices.is_empty() {
            return Err(Error::config(format!("split {split:?} is empty")));
        }
        let inputs = Matrix::gather_rows(&dataset.x, indices);
        let targets = Matrix::gather_rows(&dataset.y, indices);

        let mut rows = Vec::new();
        for dir in artifact_dirs(&subrun)? {
            let artifact = StepArtifact::load(&dir)?;
            let pred = trainer::infer(&artifact, &inputs)?;
            rows.push(EvalRow {
                artifact: dir.file_name().unwrap().to_string_lossy().into_owned(),
                c: artifact.c_t,
                mse: crate::metrics::mse(&pred, &targets)?,
            });
        }
        fs::write(
            subrun.join(format!("eval_{split}.json")),
            serde_json::to_string_pretty(&rows)?,
        )?;
    }
    Ok(())
}

/// Builds the comparison report over one or more run directories.
pub fn cmd_report(run_dirs: &[PathBuf]) -> Result<Report> {
    if run_dirs.is_empty() {
        return Err(Error::config("report needs at least one run directory"));
    }
    let mut rows: Vec<RunSummary> = Vec::new();
    for dir in run_dirs {
        for subrun in discover_subruns(dir)? {
            let info: RunInfo =
                serde_json::from_str(&fs::read_to_string(subrun.join("run.json"))?)?;
            let eval_test: Option<Vec<EvalRow>> = fs::read_to_string(subrun.join("eval_test.json"))
                .ok()
                .and_then(|s| serde_json::from_str(&s).ok());
            for artifact_dir in artifact_dirs(&subrun)? {
                let name = artifact_dir.file_name().unwrap().to_string_lossy().into_owned();
                let mask = crate::masking::read_mask(&artifact_dir.join("mask.txt"))?;
                let meta: serde_json::Value =
                    serde_json::from_str(&fs::read_to_string(artifact_dir.join("meta.json"))?)?;
                let c = meta["c_t"].as_u64().unwrap_or(0) as usize;
                let test_mse = meta["test_mse"]
                    .as_f64()
                    .or_else(|| {
                        eval_test
                            .as_ref()
                            .and_then(|rows| rows.iter().find(|r| r.artifact == name))
                            .map(|r| r.mse)
                    })
                    .ok_or_else(|| {
                        Error::config(format!(
                            "{} has no test error; run evaluate --split test first",
                            artifact_dir.display()
                        ))
                    })?;
                rows.push(RunSummary {
                    method: info.method.clone(),
                    c,
                    seed: info.seed,
                    test_mse,
                    selected: (0..mask.len()).filter(|&i| mask[i] == 1).collect(),
                    wall_time_secs: meta["wall_time_secs"].as_f64().unwrap_or(0.0),
                });
            }
        }
    }
    Ok(build_report(rows))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub hidden_layers: Vec<usize>,
    pub units: Vec<usize>,
    /// Concurrent grid combinations (each combination runs sequentially
    /// inside).
    pub jobs: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            hidden_layers: vec![1, 2, 3],
            units: vec![30, 100, 300, 1000, 3000],
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub method: String,
    pub c: usize,
    pub hidden_layers: usize,
    pub units: usize,
    pub mean_val_mse: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rows: Vec<LeaderboardRow>,
    /// Per (method, C): the grid combination with the lowest mean
    /// validation error.
    pub winners: Vec<LeaderboardRow>,
}

/// Runs the experiment for every architecture combination and selects the
/// best per channel budget by validation loss.
pub fn grid_search(config: &ExperimentConfig, grid: &GridSpec) -> Result<Leaderboard> {
    if grid.hidden_layers.is_empty() || grid.units.is_empty() {
        return Err(Error::config("grid must contain at least one combination"));
    }
    let combos: Vec<(usize, usize)> = grid
        .hidden_layers
        .iter()
        .flat_map(|&h| grid.units.iter().map(move |&u| (h, u)))
        .collect();

    let run_combo = |(h, u): (usize, usize)| -> Result<Vec<LeaderboardRow>> {
        let combo_config = ExperimentConfig {
            hidden_layers: h,
            units: u,
            output_dir: config.output_dir.join(format!("grid_l{h}_u{u}")),
            ..config.clone()
        };
        let subruns = cmd_train(&combo_config)?;
        let mut rows = Vec::new();
        for subrun in &subruns {
            let info: RunInfo =
                serde_json::from_str(&fs::read_to_string(subrun.join("run.json"))?)?;
            for m in trainer::load_run_metrics(subrun)? {
                rows.push((info.method.clone(), m.c, m.val_mse));
            }
        }
        // Mean validation loss per (method, C) across seeds.
        let mut grouped: Vec<LeaderboardRow> = Vec::new();
        rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        for (method, c, val) in rows {
            match grouped.last_mut() {
                Some(g) if g.method == method && g.c == c => {
                    // Incremental mean: seeds arrive one at a time.
                    let n = config.seeds.len() as f64;
                    g.mean_val_mse += val / n;
                }
                _ => grouped.push(LeaderboardRow {
                    method,
                    c,
                    hidden_layers: h,
                    units: u,
                    mean_val_mse: val / config.seeds.len() as f64,
                }),
            }
        }
        Ok(grouped)
    };

    let mut all_rows: Vec<LeaderboardRow> = Vec::new();
    if grid.jobs <= 1 {
        for &combo in &combos {
            all_rows.extend(run_combo(combo)?);
        }
    } else {
        let run_combo = &run_combo;
        let results: Vec<Result<Vec<LeaderboardRow>>> = std::thread::scope(|scope| {
            let mut outcomes = Vec::new();
            for chunk in combos.chunks(grid.jobs) {
                let batch: Vec<_> = chunk
                    .iter()
                    .map(|&combo| scope.spawn(move || run_combo(combo)))
                    .collect();
                for handle in batch {
                    outcomes.push(handle.join().expect("grid worker panicked"));
                }
            }
            outcomes
        });
        for r in results {
            all_rows.extend(r?);
        }
    }

    let mut winners: Vec<LeaderboardRow> = Vec::new();
    for row in &all_rows {
        match winners
            .iter_mut()
            .find(|w| w.method == row.method && w.c == row.c)
        {
            Some(w) => {
                if row.mean_val_mse < w.mean_val_mse {
                    *w = row.clone();
                }
            }
            None => winners.push(row.clone()),
        }
    }
    winners.sort_by(|a, b| a.method.cmp(&b.method).then(b.c.cmp(&a.c)));
    let leaderboard = Leaderboard { rows: all_rows, winners };
    fs::create_dir_all(&config.output_dir)?;
    fs::write(
        config.output_dir.join("leaderboard.json"),
        serde_json::to_string_pretty(&leaderboard)?,
    )?;
    Ok(leaderboard)
}

impl Leaderboard {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>6} {:>8} {:>8} {:>14}\n",
            "method", "C", "layers", "units", "val mse x100"
        ));
        for w in &self.winners {
            out.push_str(&format!(
                "{:<16} {:>6} {:>8} {:>8} {:>14.4}\n",
                w.method,
                w.c,
                w.hidden_layers,
                w.units,
                w.mean_val_mse * crate::metrics::REPORT_SCALE
            ));
        }
        out
    }
}
