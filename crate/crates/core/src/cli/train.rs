use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{ensure_writable, required, write, write_json, CliResult, TrainOpts};
use crate::train::{fit, init_network, SplitData};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CHECKPOINT_FILE: &str = "model.wcnn";
pub const TOPOLOGY_FILE: &str = "topology.toml";
pub const SPLIT_FILE: &str = "split.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    /// TOML file with any of these flags as keys
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Summary {
    profile: &'static str,
    seed: u64,
    parameters: usize,
    train_images: usize,
    val_images: usize,
    test_images: usize,
    epochs_run: usize,
    best_epoch: usize,
    best_val_acc: f64,
    test_acc: f64,
}

#[derive(Debug, Serialize)]
struct Timings {
    wall_time_s: f64,
    epoch_wall_time_s: Vec<f64>,
}

pub fn run(args: TrainArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let opts = &args.train;
    let config = opts.train_config()?;
    let profile = opts.profile();
    let topology = profile.blueprint().build()?;
    let (manifest, split) = opts.load_split()?;
    ensure_writable(out)?;
    let data = SplitData::<f32>::load(&manifest, &split, topology.input_shape[0])?;

    let metrics_path = out.join(METRICS_FILE);
    let file = File::create(&metrics_path).map_err(|e| crate::Error::io(&metrics_path, e))?;
    let mut log = BufWriter::new(file);
    let mut log_error = None;
    let network = init_network(&topology, config.seed)?;
    let parameters = network.count_trainable_params();
    let outcome = fit(network, &data, &config, |m| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  acc {:.4}  val_loss {:.4}  val_acc {:.4}",
            m.epoch, m.train_loss, m.train_accuracy, m.val_loss, m.val_accuracy
        );
        let line = serde_json::to_string(m).expect("metrics serialize");
        if log_error.is_none() {
            log_error = writeln!(log, "{line}").err();
        }
    })?;
    if let Some(e) = log_error.or_else(|| log.flush().err()) {
        return Err(crate::Error::io(&metrics_path, e).into());
    }

    outcome.network.save_checkpoint(out.join(CHECKPOINT_FILE))?;
    write(&out.join(TOPOLOGY_FILE), topology.to_toml()?)?;
    write_json(&out.join(SPLIT_FILE), &split)?;
    let summary = Summary {
        profile: profile.name(),
        seed: config.seed,
        parameters,
        train_images: data.train.len(),
        val_images: data.val.len(),
        test_images: data.test.len(),
        epochs_run: outcome.epochs_run(),
        best_epoch: outcome.best_epoch,
        best_val_acc: outcome.best_val_accuracy,
        test_acc: outcome.test_accuracy,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    write_json(
        &out.join(TIMINGS_FILE),
        &Timings {
            wall_time_s: outcome.wall_time_s,
            epoch_wall_time_s: outcome.history.iter().map(|m| m.wall_time_s).collect(),
        },
    )?;
    println!(
        "test accuracy {:.4} (best epoch {}, {} epochs run)",
        outcome.test_accuracy,
        outcome.best_epoch,
        outcome.epochs_run()
    );
    Ok(())
}
