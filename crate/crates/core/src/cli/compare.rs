use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{ensure_writable, required, usage, write, write_json, CliError, CliResult};
use crate::stats::{ComparisonReport, DescriptiveStats, RunAccuracies};

pub const REPORT_FILE: &str = "comparison.json";
pub const QUANTILES_FILE: &str = "quantiles.csv";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompareArgs {
    /// TOML file with any of these flags as keys
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Accuracies of model A (H0: A is not better than B)
    #[arg(long)]
    pub runs_a: Option<PathBuf>,
    /// Accuracies of model B
    #[arg(long)]
    pub runs_b: Option<PathBuf>,
    /// One-tailed significance level [default: 0.01]
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub label_a: Option<String>,
    #[arg(long)]
    pub label_b: Option<String>,
    /// Directory for the report JSON and boxplot quantiles; without it the
    /// report is printed
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Accuracy samples from a CSV file: the `test_acc` or `accuracy` column, or
/// the only column of a file with or without a header.
pub fn read_accuracies(path: &Path) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
    let rows: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
    let bad = |msg: String| CliError::Runtime(anyhow::anyhow!("{}: {msg}", path.display()));
    let Some(first) = rows.first() else { return Err(bad("no samples".into())) };
    let header = first.iter().any(|f| f.trim().parse::<f64>().is_err());
    let column = if !header {
        if first.len() != 1 {
            return Err(bad("a file without a header must have one column".into()));
        }
        0
    } else if first.len() == 1 {
        0
    } else {
        first
            .iter()
            .position(|f| f.trim() == "test_acc")
            .or_else(|| first.iter().position(|f| f.trim() == "accuracy"))
            .ok_or_else(|| bad("no `test_acc` or `accuracy` column".into()))?
    };
    rows.iter()
        .skip(header as usize)
        .enumerate()
        .map(|(i, r)| {
            let field = r.get(column).unwrap_or("").trim();
            field
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: `{field}` is not a number", i + 1 + header as usize)))
        })
        .collect()
}

fn default_label(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    stem.strip_suffix("_accuracies").unwrap_or(stem).to_string()
}

#[derive(Debug, Serialize)]
struct QuantileRow<'a> {
    model: &'a str,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

impl<'a> QuantileRow<'a> {
    fn new(model: &'a str, d: &DescriptiveStats) -> Self {
        QuantileRow { model, min: d.min, q1: d.q1, median: d.median, q3: d.q3, max: d.max }
    }
}

pub fn run(args: CompareArgs) -> CliResult<()> {
    let path_a = required(&args.runs_a, "runs-a")?;
    let path_b = required(&args.runs_b, "runs-b")?;
    let alpha = args.alpha.unwrap_or(0.01);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {alpha}")));
    }
    let a = RunAccuracies::new(args.label_a.clone().unwrap_or_else(|| default_label(path_a)), read_accuracies(path_a)?);
    let b = RunAccuracies::new(args.label_b.clone().unwrap_or_else(|| default_label(path_b)), read_accuracies(path_b)?);
    let report = ComparisonReport::new(&a, &b, alpha).map_err(|e| CliError::Runtime(e.into()))?;

    match &args.out {
        Some(out) => {
            ensure_writable(out)?;
            write_json(&out.join(REPORT_FILE), &report)?;
            let mut csv = csv::Writer::from_writer(Vec::new());
            csv.serialize(QuantileRow::new(&report.model_a, &report.descriptive.a)).map_err(crate::Error::from)?;
            csv.serialize(QuantileRow::new(&report.model_b, &report.descriptive.b)).map_err(crate::Error::from)?;
            let csv = csv.into_inner().map_err(|e| CliError::Runtime(anyhow::anyhow!("{e}")))?;
            write(&out.join(QUANTILES_FILE), csv)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&report).map_err(crate::Error::from)?),
    }
    println!("{}", report.verdict());
    Ok(())
}
