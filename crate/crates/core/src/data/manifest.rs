use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::radius::{class_of_radius, radius_of_class};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const VIEWS_DEG: [u16; 4] = [0, 90, 180, 270];

/// One photographed view of one blanked workpiece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub workpiece_id: u32,
    pub view_deg: u16,
    pub class_index: usize,
    pub radius_mm: f64,
    /// Relative to the manifest root.
    pub image_path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub records: Vec<SampleRecord>,
    /// Side of the square region of interest cropped from the camera frame.
    pub source_crop: usize,
    /// Side of the stored images.
    pub target_size: usize,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, records: Vec<SampleRecord>, target_size: usize) -> Self {
        DatasetManifest {
            root: root.into(),
            records,
            source_crop: 800,
            target_size,
        }
    }

    /// Reads `<root>/manifest.csv` and validates it.
    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let path = root.join(MANIFEST_FILE);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let records = reader.deserialize().collect::<std::result::Result<Vec<SampleRecord>, _>>()?;
        let target_size = records
            .first()
            .and_then(|r| image::image_dimensions(root.join(&r.image_path)).ok())
            .map(|(w, _)| w as usize)
            .unwrap_or(0);
        let manifest = DatasetManifest::new(root, records, target_size);
        manifest.validate()?;
        Ok(manifest)
    }

    /// Writes `<root>/manifest.csv` with LF line endings.
    pub fn save(&self) -> Result<()> {
        let path = self.root.join(MANIFEST_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        for r in &self.records {
            writer.serialize(r)?;
        }
        writer.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    /// Checks view angles, the class/radius bijection and that no
    /// `(workpiece_id, view_deg)` pair repeats.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut class_of_wp: BTreeMap<u32, usize> = BTreeMap::new();
        for r in &self.records {
            if !VIEWS_DEG.contains(&r.view_deg) {
                return Err(Error::Data(format!("workpiece {}: view {}° is not one of 0/90/180/270", r.workpiece_id, r.view_deg)));
            }
            let expected = radius_of_class(r.class_index)?;
            if class_of_radius(r.radius_mm)? != r.class_index {
                return Err(Error::Data(format!(
                    "workpiece {}: class {} belongs to radius {expected} mm, record says {} mm",
                    r.workpiece_id, r.class_index, r.radius_mm
                )));
            }
            if !seen.insert((r.workpiece_id, r.view_deg)) {
                return Err(Error::Data(format!("duplicate view {}° of workpiece {}", r.view_deg, r.workpiece_id)));
            }
            if let Some(prev) = class_of_wp.insert(r.workpiece_id, r.class_index) {
                if prev != r.class_index {
                    return Err(Error::Data(format!("workpiece {} labelled with two classes", r.workpiece_id)));
                }
            }
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus exactly four views per workpiece.
    pub fn validate_complete(&self) -> Result<()> {
        self.validate()?;
        for (wp, views) in self.views_per_workpiece() {
            if views != VIEWS_DEG.len() {
                return Err(Error::Data(format!("workpiece {wp} has {views} views, expected 4")));
            }
        }
        Ok(())
    }

    pub fn views_per_workpiece(&self) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for r in &self.records {
            *m.entry(r.workpiece_id).or_insert(0) += 1;
        }
        m
    }

    pub fn images_per_class(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for r in &self.records {
            *m.entry(r.class_index).or_insert(0) += 1;
        }
        m
    }

    pub fn image_path(&self, r: &SampleRecord) -> PathBuf {
        self.root.join(&r.image_path)
    }
}
