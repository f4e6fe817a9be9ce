use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{ensure_writable, required, usage, CliResult};
use crate::synthgen::{generate_dataset, RenderConfig};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenerateArgs {
    /// TOML file with any of these flags as keys
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Workpieces per wear class [default: 20]
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Side of the square images in pixels [default: 128]
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Views per workpiece: 1, 2 or 4 [default: 4]
    #[arg(long)]
    pub views: Option<usize>,
    /// Full renderer settings (noise, geometry, wear model) as TOML;
    /// the flags above override its fields
    #[arg(long)]
    pub render: Option<PathBuf>,
}

pub fn run(args: GenerateArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut config = match &args.render {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => RenderConfig::default(),
    };
    if let Some(n) = args.per_class {
        if n == 0 {
            return Err(usage("--per-class must be at least 1"));
        }
        config.workpieces_per_class = n;
    }
    config.image_size = args.image_size.unwrap_or(config.image_size);
    config.seed = args.seed.unwrap_or(config.seed);
    config.views = args.views.unwrap_or(config.views);
    config.validate()?;
    ensure_writable(out)?;
    let manifest = generate_dataset(&config, out)?;
    println!("{} images written", manifest.records.len());
    Ok(())
}
