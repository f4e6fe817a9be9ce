use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{ensure_writable, required, usage, write, write_json, CliError, CliResult, TrainOpts};
use crate::network::CLASSES;
use crate::stats::ConfusionMatrix;
use crate::train::{repeated_runs, SplitData};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentArgs {
    /// TOML file with any of these flags as keys
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
    /// Number of runs; run i uses seed + i [default: 100]
    #[arg(long)]
    pub runs: Option<usize>,
    /// Model label used in output file names [default: the profile name]
    #[arg(long)]
    pub label: Option<String>,
    /// Concurrent runs [default: one per core]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Timings {
    runs: Vec<RunTiming>,
}

#[derive(Debug, Serialize)]
struct RunTiming {
    seed: u64,
    wall_time_s: f64,
}

pub fn run(args: ExperimentArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let opts = &args.train;
    let config = opts.train_config()?;
    let runs = args.runs.unwrap_or(100);
    if runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if args.jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }
    let label = args.label.clone().unwrap_or_else(|| opts.profile().name().to_string());
    if label.is_empty() || label.contains(['/', '\\']) {
        return Err(usage(format!("label `{label}` cannot be used in a file name")));
    }
    let topology = opts.profile().blueprint().build()?;
    let (manifest, split) = opts.load_split()?;
    ensure_writable(out)?;
    let data = SplitData::<f32>::load(&manifest, &split, topology.input_shape[0])?;

    let jobs = args.jobs.unwrap_or_else(rayon::current_num_threads);
    let results = if jobs == 1 {
        repeated_runs(&topology, &data, &config, runs, config.seed, false)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Runtime(e.into()))?;
        pool.install(|| repeated_runs(&topology, &data, &config, runs, config.seed, true))?
    };

    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut confusion = ConfusionMatrix::new(CLASSES);
    for (summary, predictions) in &results {
        csv.serialize(summary).map_err(crate::Error::from)?;
        confusion.accumulate(predictions, &data.test.labels)?;
    }
    let csv = csv.into_inner().map_err(|e| CliError::Runtime(anyhow::anyhow!("{e}")))?;
    write(&out.join(format!("{label}_accuracies.csv")), csv)?;
    write(&out.join(format!("{label}_confusion_counts.csv")), confusion.counts_csv())?;
    write(&out.join(format!("{label}_confusion_percent.csv")), confusion.percent_csv())?;
    let timings = Timings {
        runs: results
            .iter()
            .map(|(s, _)| RunTiming { seed: s.seed, wall_time_s: s.wall_time_s })
            .collect(),
    };
    write_json(&out.join(format!("{label}_timings.json")), &timings)?;

    let accs: Vec<f64> = results.iter().map(|(s, _)| s.test_acc).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    println!("{runs} runs of `{label}`: mean test accuracy {mean:.4}");
    Ok(())
}
