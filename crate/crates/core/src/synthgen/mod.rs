//! Procedural stand-in for photographs of blanked workpieces.
//!
//! Edge wear shows as a growing, saturating burr rim, a shear zone that
//! widens up to 0.20 mm and then plateaus, a slowly widening rollover
//! zone and punch marks that fade out by 0.55 mm. The burr saturation makes
//! the largest radii hard to tell apart.

mod generate;
mod profile;
mod render;

pub use generate::{generate_dataset, image_relpath, sample_seed, RENDER_CONFIG_FILE};
pub use profile::{wear_profile, WearModel, WearProfile};
pub use render::{render_field, render_workpiece, Geometry, NoiseConfig, RenderConfig, RenderedField};
