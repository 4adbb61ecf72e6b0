//! Command-line entry point. Exit codes: 0 success, 1 configuration error,
//! 2 runtime abort.

use clap::{Args, Parser, Subcommand};
use jofsto::harness::{
    cmd_evaluate, cmd_report, cmd_simulate, cmd_train, grid_search, Ablation, ExperimentConfig,
    GridSpec, Method, SimulateSpec,
};
use jofsto::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "jofsto", version, about = "Joint feature selection and task optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Simulate(SimulateArgs),
    /// Train the configured methods over the seed list.
    Train(TrainArgs),
    /// Re-evaluate a run directory's artifacts on a dataset split.
    Evaluate(EvaluateArgs),
    /// Build a comparison table from one or more run directories.
    Report(ReportArgs),
    /// Architecture grid search, selecting the best network per budget by
    /// validation loss.
    Grid(GridArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Dataset directory to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    n_train: usize,
    #[arg(long, default_value_t = 2_000)]
    n_val: usize,
    #[arg(long, default_value_t = 2_000)]
    n_test: usize,
    #[arg(long, default_value_t = 64)]
    c_bar: usize,
    #[arg(long, default_value_t = 50.0)]
    snr: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Channels to decouple from the targets (comma separated); defaults
    /// to the standard corrupted-channel stride.
    #[arg(long, value_delimiter = ',')]
    noise_channels: Option<Vec<usize>>,
    /// Generate every channel clean (no corrupted channels).
    #[arg(long, conflicts_with = "noise_channels")]
    clean: bool,
}

#[derive(Args, Default)]
struct TrainArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory (overrides the config file).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (overrides the config file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Channel budgets, e.g. 64,32,16,8,4.
    #[arg(long, value_delimiter = ',')]
    c_list: Option<Vec<usize>>,
    #[arg(long)]
    e1: Option<usize>,
    #[arg(long)]
    e2: Option<usize>,
    #[arg(long)]
    e3: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden_layers: Option<usize>,
    #[arg(long)]
    units: Option<usize>,
    /// Methods to run (comma separated): jofsto, random_fs.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<Method>>,
    /// Seeds to run (comma separated).
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long)]
    ablation: Option<Ablation>,
    /// Skip per-step test evaluation.
    #[arg(long)]
    no_eval_test: bool,
}

impl TrainArgs {
    fn merged_config(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.data {
            config.data_dir = v.clone();
        }
        if let Some(v) = &self.out {
            config.output_dir = v.clone();
        }
        if let Some(v) = &self.c_list {
            config.c_list = v.clone();
        }
        if let Some(v) = self.e1 {
            config.e1 = v;
        }
        if let Some(v) = self.e2 {
            config.e2 = v;
        }
        if let Some(v) = self.e3 {
            config.e3 = v;
        }
        if let Some(v) = self.patience {
            config.patience = v;
        }
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.lr {
            config.learning_rate = v;
        }
        if let Some(v) = self.hidden_layers {
            config.hidden_layers = v;
        }
        if let Some(v) = self.units {
            config.units = v;
        }
        if let Some(v) = &self.method {
            config.methods = v.clone();
        }
        if let Some(v) = &self.seed {
            config.seeds = v.clone();
        }
        if self.ablation.is_some() {
            config.ablation = self.ablation;
        }
        if self.no_eval_test {
            config.eval_test = false;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run directory (a single run or a parent of runs).
    #[arg(long)]
    run: PathBuf,
    /// Split to evaluate: train, val, or test.
    #[arg(long, default_value = "test")]
    split: String,
    /// Override the dataset directory recorded in the run.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories to aggregate.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Also write the machine-readable report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    train: TrainArgs,
    /// Hidden-layer counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    layers_grid: Vec<usize>,
    /// Hidden-unit counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [30usize, 100, 300, 1000, 3000])]
    units_grid: Vec<usize>,
    /// Concurrent grid combinations.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let noise_channels = if args.clean {
                Vec::new()
            } else {
                args.noise_channels
                    .unwrap_or_else(|| jofsto::data::default_corrupted_channels(args.c_bar))
            };
            let spec = SimulateSpec {
                n_train: args.n_train,
                n_val: args.n_val,
                n_test: args.n_test,
                c_bar: args.c_bar,
                snr: args.snr,
                seed: args.seed,
                noise_channels,
            };
            cmd_simulate(&spec, &args.out)?;
            println!("wrote dataset to {}", args.out.display());
        }
        Command::Train(args) => {
            let config = args.merged_config()?;
            let subruns = cmd_train(&config)?;
            for dir in subruns {
                println!("trained {}", dir.display());
            }
        }
        Command::Evaluate(args) => {
            cmd_evaluate(&args.run, &args.split, args.data.as_deref())?;
            println!("evaluated {} on {}", args.run.display(), args.split);
        }
        Command::Report(args) => {
            let report = cmd_report(&args.runs)?;
            print!("{}", report.to_text());
            if let Some(path) = args.out {
                std::fs::write(&path, serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Grid(args) => {
            let config = args.train.merged_config()?;
            let grid = GridSpec {
                hidden_layers: args.layers_grid,
                units: args.units_grid,
                jobs: args.jobs,
            };
            let leaderboard = grid_search(&config, &grid)?;
            print!("{}", leaderboard.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version arrive here as "errors"; keep their exit 0.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
