use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{ensure_writable, required, usage, write_json, CliResult, Profile, SplitMode, TrainOpts};
use crate::hpo::{cnn_from_config, run_hpo, BayesOpt, Config, SearchSpace};
use crate::train::{fit, init_network, SplitData, TrainConfig};

pub const HISTORY_FILE: &str = "hpo_history.jsonl";
pub const BEST_FILE: &str = "best_config.json";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct HpoArgs {
    /// TOML file with any of these flags as keys
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Corpus directory containing manifest.csv
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Widths and input size: `desk` divides the searched widths by four [default: desk]
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of configurations to evaluate [default: 20]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Training epochs per configuration [default: 50]
    #[arg(long)]
    pub epochs_per_trial: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_enum)]
    pub split: Option<SplitMode>,
    /// Search space as TOML [default: the built-in CNN space]
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Best<'a> {
    trial: usize,
    validation_accuracy: f64,
    config: &'a Config,
}

pub fn run(args: HpoArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let trials = args.trials.unwrap_or(20);
    let epochs = args.epochs_per_trial.unwrap_or(50);
    if trials == 0 || epochs == 0 {
        return Err(usage("--trials and --epochs-per-trial must be positive"));
    }
    let space = match &args.space {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let space: SearchSpace = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            space.validate()?;
            space
        }
        None => SearchSpace::cnn(),
    };
    let opts = TrainOpts {
        data: args.data.clone(),
        profile: args.profile,
        seed: args.seed,
        epochs: Some(epochs),
        patience: Some(epochs),
        batch_size: args.batch_size,
        lr: None,
        split: args.split,
    };
    let base = opts.train_config()?;
    let profile = opts.profile();
    let blueprint = profile.blueprint();
    let divisor = match profile {
        Profile::Paper => 1,
        Profile::Desk => 4,
    };
    let (manifest, split) = opts.load_split()?;
    ensure_writable(out)?;
    let data = SplitData::<f32>::load(&manifest, &split, blueprint.input_shape[0])?;

    let history_path = out.join(HISTORY_FILE);
    let file = File::create(&history_path).map_err(|e| crate::Error::io(&history_path, e))?;
    let mut log = BufWriter::new(file);
    let optimizer = BayesOpt::new(space, base.seed);
    let objective = |config: &Config| -> crate::Result<f64> {
        let (topology, learning_rate) = cnn_from_config(config, &blueprint, divisor)?;
        let cfg = TrainConfig { learning_rate, ..base.clone() };
        let outcome = fit(init_network(&topology, cfg.seed)?, &data, &cfg, |_| {})?;
        Ok(outcome.history.last().map_or(f64::NAN, |m| m.val_accuracy))
    };
    let outcome = run_hpo(&optimizer, trials, objective, |trial| {
        eprintln!("trial {:>3}  objective {:.4}", trial.index, trial.objective());
        serde_json::to_writer(&mut log, trial)?;
        log.write_all(b"\n").and_then(|_| log.flush()).map_err(|e| crate::Error::io(&history_path, e))
    })?;

    let Some(best) = outcome.best else {
        return Err(super::CliError::Runtime(anyhow::anyhow!("all {trials} trials failed")));
    };
    write_json(
        &out.join(BEST_FILE),
        &Best { trial: best.index, validation_accuracy: best.objective(), config: &best.config },
    )?;
    println!("best validation accuracy {:.4} at trial {}", best.objective(), best.index);
    Ok(())
}
