use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::render::{render_workpiece, RenderConfig};
use crate::data::{DatasetManifest, SampleRecord, RADII_MM};
use crate::error::{Error, Result};
use crate::seed::splitmix64;

pub const RENDER_CONFIG_FILE: &str = "render_config.toml";

/// Seed of one rendered view, independent of rendering order.
pub fn sample_seed(master: u64, workpiece_id: u32, view_deg: u16) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ workpiece_id as u64) ^ view_deg as u64)
}

/// Relative path of a rendered view inside the corpus directory.
pub fn image_relpath(class: usize, workpiece_id: u32, view_deg: u16) -> String {
    format!("images/c{class:02}/wp{workpiece_id:05}_v{view_deg:03}.png")
}

/// Renders `workpieces_per_class × 16 × views` images into `out` together
/// with `manifest.csv` and a copy of `config`.
///
/// Workpiece ids interleave the classes: workpiece `k·16 + c` is the
/// `k`-th workpiece of class `c`.
pub fn generate_dataset(config: &RenderConfig, out: &Path) -> Result<DatasetManifest> {
    config.validate()?;
    for class in 0..RADII_MM.len() {
        let dir = out.join(format!("images/c{class:02}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let views = config.view_angles();
    let mut records = Vec::with_capacity(config.workpieces_per_class * RADII_MM.len() * views.len());
    for k in 0..config.workpieces_per_class {
        for (class, &r) in RADII_MM.iter().enumerate() {
            let workpiece_id = (k * RADII_MM.len() + class) as u32;
            for &view_deg in &views {
                records.push(SampleRecord {
                    workpiece_id,
                    view_deg,
                    class_index: class,
                    radius_mm: r,
                    image_path: image_relpath(class, workpiece_id, view_deg),
                });
            }
        }
    }
    records.par_iter().try_for_each(|rec| -> Result<()> {
        let profile = config.wear.profile(rec.radius_mm);
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(config.seed, rec.workpiece_id, rec.view_deg));
        let img = render_workpiece(&profile, rec.view_deg, config, &mut rng);
        let path = out.join(&rec.image_path);
        img.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    })?;
    let manifest = DatasetManifest::new(out, records, config.image_size);
    manifest.save()?;
    let snapshot = toml::to_string_pretty(config).map_err(|e| Error::Config(e.to_string()))?;
    let path = out.join(RENDER_CONFIG_FILE);
    fs::write(&path, snapshot).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_view_and_workpiece() {
        let s = sample_seed(0, 1, 0);
        assert_ne!(s, sample_seed(0, 1, 90));
        assert_ne!(s, sample_seed(0, 2, 0));
        assert_ne!(s, sample_seed(1, 1, 0));
        assert_eq!(s, sample_seed(0, 1, 0));
    }
}
