//! Dataset manifests, image loading and workpiece-level splits.

mod image;
mod manifest;
mod radius;
mod split;

pub use image::{bilinear_resize, load_batch, normalize_image};
pub use manifest::{DatasetManifest, SampleRecord, MANIFEST_FILE, VIEWS_DEG};
pub use radius::{class_label, class_of_radius, radius_of_class, RADII_MM};
pub use split::{fractional_split, per_class_holdout, scaled_holdout, Split};
