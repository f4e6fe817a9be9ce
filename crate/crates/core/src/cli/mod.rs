//! Command-line front end.
//!
//! Every subcommand also accepts `--config FILE`, a TOML table whose keys are
//! the subcommand's long flag names (`per-class = 5`). Flags given on the
//! command line take precedence over the file.

mod compare;
mod experiment;
mod generate;
mod hpo;
mod report;
mod train;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{fractional_split, per_class_holdout, scaled_holdout, DatasetManifest, Split};
use crate::network::CnnBlueprint;
use crate::seed::substream;
use crate::train::TrainConfig;

pub use compare::CompareArgs;
pub use experiment::ExperimentArgs;
pub use generate::GenerateArgs;
pub use hpo::HpoArgs;
pub use report::ReportArgs;
pub use train::TrainArgs;

#[derive(Debug, Parser)]
#[command(name = "wearcnn", version, about = "Punch wear classification from workpiece images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic workpiece corpus
    Generate(GenerateArgs),
    /// Train one network and save it with its metrics
    Train(TrainArgs),
    /// Repeat training with consecutive seeds and collect test accuracies
    Experiment(ExperimentArgs),
    /// Bayesian hyperparameter search
    Hpo(HpoArgs),
    /// One-tailed Welch test between two accuracy files
    Compare(CompareArgs),
    /// Confusion matrices of a saved network
    Report(ReportArgs),
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Usage(String),
    /// Anything that went wrong while running; exit code 1.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Config(m) => CliError::Usage(m),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => generate::run(resolve(&a, a.config.as_deref(), "generate")?),
        Command::Train(a) => train::run(resolve(&a, a.config.as_deref(), "train")?),
        Command::Experiment(a) => experiment::run(resolve(&a, a.config.as_deref(), "experiment")?),
        Command::Hpo(a) => hpo::run(resolve(&a, a.config.as_deref(), "hpo")?),
        Command::Compare(a) => compare::run(resolve(&a, a.config.as_deref(), "compare")?),
        Command::Report(a) => report::run(resolve(&a, a.config.as_deref(), "report")?),
    }
}

/// Overlays command-line flags on the config file, if any.
fn resolve<A: Serialize + DeserializeOwned + Clone>(args: &A, config: Option<&Path>, sub: &str) -> CliResult<A> {
    let Some(path) = config else { return Ok(args.clone()) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut table: toml::Table = text.parse().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let known: HashSet<String> = Cli::command()
        .find_subcommand(sub)
        .expect("subcommand is registered")
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|l| l != "config")
        .collect();
    if let Some(k) = table.keys().find(|k| !known.contains(*k)) {
        return Err(usage(format!("{}: unknown key `{k}`", path.display())));
    }
    let flags = toml::Table::try_from(args).map_err(|e| usage(e.to_string()))?;
    table.extend(flags);
    table.try_into().map_err(|e| usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 128×128 inputs and the full layer widths
    Paper,
    /// 64×64 inputs and a quarter of the widths
    Desk,
}

impl Profile {
    pub fn blueprint(self) -> CnnBlueprint {
        match self {
            Profile::Paper => CnnBlueprint::paper(),
            Profile::Desk => CnnBlueprint::desk(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Fixed number of validation and test images per class, scaled to the corpus
    Holdout,
    /// 70/15/15 of the workpieces
    Fractions,
}

/// Flags shared by every command that trains.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainOpts {
    /// Corpus directory containing manifest.csv
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of epochs [default: 200]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without improvement before stopping, capped at --epochs [default: 30]
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub split: Option<SplitMode>,
}

impl TrainOpts {
    pub fn profile(&self) -> Profile {
        self.profile.unwrap_or(Profile::Desk)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn data_dir(&self) -> CliResult<&Path> {
        let dir = self.data.as_deref().ok_or_else(|| usage("--data is required"))?;
        if !dir.is_dir() {
            return Err(CliError::Runtime(anyhow::anyhow!("data directory {} does not exist", dir.display())));
        }
        Ok(dir)
    }

    pub fn train_config(&self) -> CliResult<TrainConfig> {
        let d = TrainConfig::default();
        let max_epochs = self.epochs.unwrap_or(d.max_epochs);
        let cfg = TrainConfig {
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            max_epochs,
            patience_epochs: self.patience.unwrap_or(d.patience_epochs).min(max_epochs),
            seed: self.seed(),
            ..d
        };
        if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
            return Err(usage(format!("--lr must be positive, got {}", cfg.learning_rate)));
        }
        if cfg.max_epochs == 0 || cfg.batch_size == 0 {
            return Err(usage("--epochs and --batch-size must be positive"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads the manifest and partitions it under the `"split"` substream.
    pub fn load_split(&self) -> CliResult<(DatasetManifest, Split)> {
        let manifest = DatasetManifest::load(self.data_dir()?)?;
        let seed = substream(self.seed(), "split");
        let split = match self.split.unwrap_or(SplitMode::Holdout) {
            SplitMode::Holdout => {
                let per_class = manifest.images_per_class().values().copied().min().unwrap_or(0);
                let n = scaled_holdout(per_class);
                per_class_holdout(&manifest, n, n, seed)?
            }
            SplitMode::Fractions => fractional_split(&manifest, (0.70, 0.15, 0.15), seed)?,
        };
        Ok((manifest, split))
    }
}

/// Creates `dir` and checks that files can be written into it.
fn ensure_writable(dir: &Path) -> CliResult<()> {
    let probe = dir.join(".wearcnn-write-probe");
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&probe, b""))
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| usage(format!("output directory {} is not writable: {e}", dir.display())))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::from(crate::Error::io(path, e)))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(crate::Error::from)?;
    text.push('\n');
    write(path, text)
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| usage(format!("--{flag} is required")))
}
