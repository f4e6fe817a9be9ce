use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::train::TOPOLOGY_FILE;
use super::{ensure_writable, required, write, write_json, CliError, CliResult};
use crate::data::{radius_of_class, DatasetManifest, Split};
use crate::network::{Network, Topology};
use crate::stats::ConfusionMatrix;
use crate::train::{evaluate, Dataset};

pub const COUNTS_FILE: &str = "confusion_counts.csv";
pub const PERCENT_FILE: &str = "confusion_percent.csv";
pub const PER_CLASS_FILE: &str = "per_class_accuracy.json";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReportArgs {
    /// TOML file with any of these flags as keys
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Saved network weights
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Corpus directory containing manifest.csv
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Network topology [default: topology.toml beside the checkpoint]
    #[arg(long)]
    pub topology: Option<PathBuf>,
    /// Split file written by `train`; only its test images are evaluated.
    /// Without it the whole corpus is evaluated
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Output directory [default: the checkpoint's directory]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ClassAccuracy {
    class: usize,
    radius_mm: f64,
    support: u64,
    /// `None` for classes without samples.
    accuracy: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PerClassReport {
    images: u64,
    accuracy: f64,
    adjacent_error_share: Option<f64>,
    classes: Vec<ClassAccuracy>,
}

pub fn run(args: ReportArgs) -> CliResult<()> {
    let checkpoint = required(&args.checkpoint, "checkpoint")?;
    let data_dir = required(&args.data, "data")?;
    let parent = checkpoint.parent().map(PathBuf::from).unwrap_or_default();
    let topology_path = args.topology.clone().unwrap_or_else(|| parent.join(TOPOLOGY_FILE));
    let text = fs::read_to_string(&topology_path).map_err(|e| crate::Error::io(&topology_path, e))?;
    let topology = Topology::from_toml(&text)?;
    let network = Network::<f32>::load_checkpoint(topology, checkpoint)?;

    let manifest = DatasetManifest::load(data_dir)?;
    let records = match &args.split {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
            let split: Split = serde_json::from_str(&text).map_err(crate::Error::from)?;
            split.test
        }
        None => manifest.records.clone(),
    };
    if records.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("no images to evaluate")));
    }
    let data = Dataset::<f32>::load(&manifest, &records, network.topology.input_shape[0])?;
    let eval = evaluate(&network, &data)?;
    let mut confusion = ConfusionMatrix::new(network.topology.classes());
    confusion.accumulate(&eval.predictions, &data.labels)?;

    let out = args.out.clone().unwrap_or(parent);
    ensure_writable(&out)?;
    write(&out.join(COUNTS_FILE), confusion.counts_csv())?;
    write(&out.join(PERCENT_FILE), confusion.percent_csv())?;
    let classes = confusion
        .per_class_accuracy()
        .into_iter()
        .enumerate()
        .map(|(class, acc)| {
            Ok(ClassAccuracy {
                class,
                radius_mm: radius_of_class(class)?,
                support: confusion.counts[class].iter().sum(),
                accuracy: acc.is_finite().then_some(acc),
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let errors = confusion.errors();
    let report = PerClassReport {
        images: confusion.total(),
        accuracy: confusion.accuracy(),
        adjacent_error_share: (errors > 0).then(|| confusion.adjacent_errors() as f64 / errors as f64),
        classes,
    };
    write_json(&out.join(PER_CLASS_FILE), &report)?;
    println!("accuracy {:.4} on {} images", report.accuracy, report.images);
    Ok(())
}
