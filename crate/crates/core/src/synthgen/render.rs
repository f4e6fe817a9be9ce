//! Oblique-view drawing of a blanked disc.
//!
//! The top face is an ellipse. Below its front edge hangs the cut surface,
//! a band split top to bottom into rollover, shear and rupture zones, and
//! below that the burr rim. Each image column is integrated exactly over
//! these vertical segments, so zone boundaries move pixel intensities
//! continuously even when they shift by a fraction of a pixel.

use std::f64::consts::PI;

use image::{Rgb, RgbImage};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::profile::{WearModel, WearProfile};
use crate::error::{Error, Result};

/// Lengths are fractions of the image side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    /// Semi-major axis of the top face.
    pub disc_radius: f64,
    /// Minor to major axis ratio of the top face (cosine of the camera tilt).
    pub aspect: f64,
    pub centre_y: f64,
    /// Projected height of the cut surface.
    pub band: f64,
    /// Rim thickness at the asymptotic burr height.
    pub rim: f64,
    /// Extent of the punch-marked area relative to the top face.
    pub mark_region: f64,
    pub mark_count: usize,
    pub mark_size: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            disc_radius: 0.36,
            aspect: 0.45,
            centre_y: 0.36,
            band: 0.24,
            rim: 0.08,
            mark_region: 0.65,
            mark_count: 40,
            mark_size: 0.009,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Half-width of the uniform multiplicative lighting gain.
    pub lighting_gain: f64,
    /// Standard deviation of the relative burr thickness around the rim.
    pub burr_angular: f64,
    /// Standard deviation of per-channel pixel noise.
    pub pixel: f64,
    /// Standard deviation of the rollover and shear shares per workpiece.
    pub zone_jitter: f64,
    /// Half-width of the uniform disc position offset, fraction of the side.
    pub position: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            lighting_gain: 0.04,
            burr_angular: 0.12,
            pixel: 0.012,
            zone_jitter: 0.002,
            position: 0.012,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub image_size: usize,
    pub workpieces_per_class: usize,
    pub views: usize,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub geometry: Geometry,
    pub wear: WearModel,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            image_size: 128,
            workpieces_per_class: 20,
            views: 4,
            seed: 0,
            noise: NoiseConfig::default(),
            geometry: Geometry::default(),
            wear: WearModel::default(),
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_size < 16 {
            return Err(Error::Config(format!("image size {} is below 16", self.image_size)));
        }
        if self.workpieces_per_class == 0 {
            return Err(Error::Config("workpieces per class must be positive".into()));
        }
        // views must land on the 0/90/180/270 grid of the manifest
        if ![1, 2, 4].contains(&self.views) {
            return Err(Error::Config(format!("{} views do not divide 360° into quarter turns", self.views)));
        }
        let n = &self.noise;
        if [n.lighting_gain, n.burr_angular, n.pixel, n.zone_jitter, n.position].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("noise amplitudes must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn view_angles(&self) -> Vec<u16> {
        (0..self.views).map(|k| (k * 360 / self.views) as u16).collect()
    }
}

const BACKGROUND: f64 = 0.12;
const TOP_FACE: f64 = 0.58;
const SHEAR: f64 = 0.72;
const RUPTURE: f64 = 0.30;
const RIM: f64 = 0.95;
const MARK_DEPTH: f64 = 0.25;
const TINT: [f64; 3] = [1.0, 0.97, 0.92];
const SUBCOLUMNS: usize = 4;
const HARMONICS: usize = 6;

/// Gray-level layers of one rendering, row-major `size × size`.
#[derive(Debug, Clone)]
pub struct RenderedField {
    pub size: usize,
    /// Scene luminance before lighting gain, tint and pixel noise.
    pub luminance: Vec<f64>,
    /// Punch-mark contribution already included in `luminance`.
    pub speckle: Vec<f64>,
    /// Pixels inside the punch-marked area of the top face.
    pub mark_mask: Vec<bool>,
}

/// One vertical run of constant or linearly varying tone.
struct Segment {
    y0: f64,
    y1: f64,
    top: f64,
    bottom: f64,
}

impl Segment {
    /// Integral of the tone over `[a, b]`.
    fn integrate(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (a.max(self.y0), b.min(self.y1));
        if hi <= lo {
            return 0.0;
        }
        let mid = 0.5 * (lo + hi);
        let s = if self.y1 > self.y0 { (mid - self.y0) / (self.y1 - self.y0) } else { 0.0 };
        (hi - lo) * (self.top + (self.bottom - self.top) * s)
    }
}

/// Draws the scene layers; all randomness is consumed from `rng` in a fixed order.
pub fn render_field<R: Rng>(profile: &WearProfile, view_deg: u16, config: &RenderConfig, rng: &mut R) -> RenderedField {
    let s = config.image_size;
    let sf = s as f64;
    let g = &config.geometry;
    let noise = &config.noise;
    let view = view_deg as f64 * PI / 180.0;
    let normal = |sd: f64| Normal::new(0.0, sd).expect("non-negative deviation");

    let cx = sf * 0.5 + rng.gen_range(-1.0..=1.0) * noise.position * sf;
    let cy = sf * g.centre_y + rng.gen_range(-1.0..=1.0) * noise.position * sf;
    let a = g.disc_radius * sf;
    let b = a * g.aspect;
    let band = g.band * sf;
    let thickness = profile.thickness_mm();
    let rollover = (profile.rollover_mm / thickness + normal(noise.zone_jitter).sample(rng)).clamp(0.0, 1.0);
    let shear = (profile.shear_mm / thickness + normal(noise.zone_jitter).sample(rng)).clamp(0.0, 1.0 - rollover);
    let rim_mean = g.rim * sf * profile.burr_height_mm / config.wear.burr_max_mm;
    let harmonic_sd = noise.burr_angular / (HARMONICS as f64 - 1.0).sqrt();
    let harmonics: Vec<(f64, f64)> = (2..=HARMONICS)
        .map(|_| (normal(harmonic_sd).sample(rng), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let light_phase = view + rng.gen_range(-0.3..0.3);
    let columns = s * SUBCOLUMNS;
    let texture = |rng: &mut R, amp: f64, smooth: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..columns).map(|_| rng.gen_range(-amp..=amp)).collect();
        (0..columns)
            .map(|i| {
                let lo = i.saturating_sub(smooth);
                let hi = (i + smooth + 1).min(columns);
                raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect()
    };
    let striation = texture(rng, 0.04, 1);
    let roughness = texture(rng, 0.12, 3);
    let marks: Vec<(f64, f64)> = (0..g.mark_count)
        .map(|_| {
            let rho = g.mark_region * rng.gen::<f64>().sqrt();
            let psi = rng.gen_range(0.0..2.0 * PI) + view;
            (cx + a * rho * psi.cos(), cy + b * rho * psi.sin())
        })
        .collect();
    let mark_sigma = g.mark_size * sf;

    let mut luminance = vec![0.0; s * s];
    let mut speckle = vec![0.0; s * s];
    let mut mark_mask = vec![false; s * s];
    let top_tone = |x: f64| TOP_FACE + 0.06 * ((x - cx) / a * PI * 0.5 + light_phase).cos();

    for col in 0..columns {
        let x = (col as f64 + 0.5) / SUBCOLUMNS as f64;
        let ix = col / SUBCOLUMNS;
        let u = (x - cx) / a;
        let mut segments = vec![];
        if u.abs() < 1.0 {
            let half = b * (1.0 - u * u).sqrt();
            let (face_top, face_bottom) = (cy - half, cy + half);
            let z1 = face_bottom + band * rollover;
            let z2 = z1 + band * shear;
            let z3 = face_bottom + band;
            let azimuth = u.acos() + view;
            let wobble: f64 = harmonics.iter().enumerate().map(|(k, (amp, ph))| amp * ((k as f64 + 2.0) * azimuth + ph).cos()).sum();
            let rim = (rim_mean * (1.0 + wobble)).max(0.0);
            let top = top_tone(x);
            segments.push(Segment { y0: face_top, y1: face_bottom, top, bottom: top });
            segments.push(Segment { y0: face_bottom, y1: z1, top: top - 0.04, bottom: 0.38 });
            let sh = SHEAR + striation[col];
            segments.push(Segment { y0: z1, y1: z2, top: sh, bottom: sh });
            let ru = RUPTURE + roughness[col];
            segments.push(Segment { y0: z2, y1: z3, top: ru, bottom: ru });
            segments.push(Segment { y0: z3, y1: z3 + rim, top: RIM, bottom: RIM });
            for iy in 0..s {
                let (y0, y1) = (iy as f64, iy as f64 + 1.0);
                let covered: f64 = segments.iter().map(|seg| (y1.min(seg.y1) - y0.max(seg.y0)).max(0.0)).sum();
                let tone: f64 = segments.iter().map(|seg| seg.integrate(y0, y1)).sum();
                luminance[iy * s + ix] += (tone + (1.0 - covered) * BACKGROUND) / SUBCOLUMNS as f64;
            }
        } else {
            for iy in 0..s {
                luminance[iy * s + ix] += BACKGROUND / SUBCOLUMNS as f64;
            }
        }
    }

    for iy in 0..s {
        for ix in 0..s {
            let (px, py) = (ix as f64 + 0.5, iy as f64 + 0.5);
            let (du, dv) = ((px - cx) / a, (py - cy) / b);
            if du * du + dv * dv >= g.mark_region * g.mark_region {
                continue;
            }
            let i = iy * s + ix;
            mark_mask[i] = true;
            let pits: f64 = marks
                .iter()
                .map(|&(mx, my)| (-((px - mx).powi(2) + (py - my).powi(2)) / (2.0 * mark_sigma * mark_sigma)).exp())
                .sum();
            speckle[i] = -MARK_DEPTH * profile.mark_intensity * pits.min(1.0);
            luminance[i] += speckle[i];
        }
    }
    RenderedField { size: s, luminance, speckle, mark_mask }
}

/// Renders one view as an 8-bit RGB image, applying lighting gain, tint
/// and pixel noise to [`render_field`].
pub fn render_workpiece<R: Rng>(profile: &WearProfile, view_deg: u16, config: &RenderConfig, rng: &mut R) -> RgbImage {
    let field = render_field(profile, view_deg, config, rng);
    let gain = 1.0 + rng.gen_range(-1.0..=1.0) * config.noise.lighting_gain;
    let pixel = Normal::new(0.0, config.noise.pixel).expect("validated noise");
    let s = field.size as u32;
    let mut img = RgbImage::new(s, s);
    for (i, px) in img.pixels_mut().enumerate() {
        let v = field.luminance[i] * gain;
        let mut rgb = [0u8; 3];
        for (c, out) in rgb.iter_mut().enumerate() {
            let value = v * TINT[c] + pixel.sample(rng);
            *out = (value.clamp(0.0, 1.0) * 255.0).round() as u8;
        }
        *px = Rgb(rgb);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::wear_profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_seed_same_pixels() {
        let cfg = RenderConfig::default();
        let p = wear_profile(0.3);
        let a = render_workpiece(&p, 90, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let b = render_workpiece(&p, 90, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.as_raw(), b.as_raw());
        let c = render_workpiece(&p, 90, &cfg, &mut ChaCha8Rng::seed_from_u64(6));
        assert_ne!(a.as_raw(), c.as_raw());
    }

    #[test]
    fn no_marks_without_mark_intensity() {
        let cfg = RenderConfig::default();
        let field = render_field(&wear_profile(0.6), 0, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(field.mark_mask.iter().any(|&m| m));
        let energy: f64 = field.speckle.iter().zip(&field.mark_mask).filter(|(_, &m)| m).map(|(v, _)| v * v).sum();
        assert_eq!(energy, 0.0);
        let fresh = render_field(&wear_profile(0.0), 0, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(fresh.speckle.iter().map(|v| v * v).sum::<f64>() > 0.1);
    }

    #[test]
    fn view_grid() {
        let mut cfg = RenderConfig::default();
        assert_eq!(cfg.view_angles(), vec![0, 90, 180, 270]);
        cfg.views = 3;
        assert!(cfg.validate().is_err());
    }
}
