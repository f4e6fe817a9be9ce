use crate::error::{Error, Result};

/// The sixteen punch cutting-edge radii (mm), ascending. Class `i` is `RADII_MM[i]`.
pub const RADII_MM: [f64; 16] = [
    0.0, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80,
];

pub fn class_of_radius(r_mm: f64) -> Result<usize> {
    RADII_MM
        .iter()
        .position(|&v| (v - r_mm).abs() <= 1e-9)
        .ok_or_else(|| Error::InvalidArgument(format!("{r_mm} mm is not one of the sixteen wear radii")))
}

pub fn radius_of_class(class: usize) -> Result<f64> {
    RADII_MM
        .get(class)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("class {class} outside 0..16")))
}

/// Short label used in reports, e.g. `r00`, `r45`.
pub fn class_label(class: usize) -> String {
    format!("r{:02}", (RADII_MM[class] * 100.0).round() as u32)
}
