use serde::{Deserialize, Serialize};

use crate::data::RADII_MM;

/// Constants of the radius-to-appearance curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WearModel {
    pub sheet_thickness_mm: f64,
    /// Asymptotic burr height.
    pub burr_max_mm: f64,
    /// Radius scale of the burr saturation.
    pub burr_saturation_mm: f64,
    /// Shear zone share of the thickness at r = 0 and on the plateau.
    pub shear_start: f64,
    pub shear_plateau: f64,
    /// Radius at which the shear share stops growing.
    pub shear_knee_mm: f64,
    /// Rollover share at r = 0 and at the largest radius.
    pub rollover_start: f64,
    pub rollover_end: f64,
    /// Radius from which the punch leaves no marks.
    pub marks_vanish_mm: f64,
}

impl Default for WearModel {
    fn default() -> Self {
        WearModel {
            sheet_thickness_mm: 1.0,
            burr_max_mm: 0.10,
            burr_saturation_mm: 0.15,
            shear_start: 0.30,
            shear_plateau: 0.55,
            shear_knee_mm: 0.20,
            rollover_start: 0.05,
            rollover_end: 0.35,
            marks_vanish_mm: 0.55,
        }
    }
}

/// Renderable appearance of a workpiece blanked with edge radius `radius_mm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WearProfile {
    pub radius_mm: f64,
    pub burr_height_mm: f64,
    pub rollover_mm: f64,
    pub shear_mm: f64,
    pub rupture_mm: f64,
    /// Punch-mark visibility in `[0, 1]`.
    pub mark_intensity: f64,
}

impl WearProfile {
    pub fn thickness_mm(&self) -> f64 {
        self.rollover_mm + self.shear_mm + self.rupture_mm
    }

    pub fn shear_fraction(&self) -> f64 {
        self.shear_mm / self.thickness_mm()
    }

    pub fn rollover_fraction(&self) -> f64 {
        self.rollover_mm / self.thickness_mm()
    }
}

impl WearModel {
    pub fn profile(&self, r: f64) -> WearProfile {
        let r = r.max(0.0);
        let t = self.sheet_thickness_mm;
        let r_max = RADII_MM[RADII_MM.len() - 1];
        let burr = self.burr_max_mm * (1.0 - (-r / self.burr_saturation_mm).exp());
        let shear = self.shear_start + (self.shear_plateau - self.shear_start) * (r / self.shear_knee_mm).min(1.0);
        let rollover = self.rollover_start + (self.rollover_end - self.rollover_start) * (r / r_max).min(1.0);
        let rupture = (1.0 - shear - rollover).max(0.0);
        WearProfile {
            radius_mm: r,
            burr_height_mm: burr,
            rollover_mm: rollover * t,
            shear_mm: shear * t,
            rupture_mm: rupture * t,
            mark_intensity: (1.0 - r / self.marks_vanish_mm).max(0.0),
        }
    }
}

/// Profile under the default [`WearModel`].
pub fn wear_profile(r: f64) -> WearProfile {
    WearModel::default().profile(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unworn_edge() {
        let p = wear_profile(0.0);
        assert_eq!(p.burr_height_mm, 0.0);
        assert_eq!(p.mark_intensity, 1.0);
    }

    #[test]
    fn burr_curve_is_concave() {
        let h = |r| wear_profile(r).burr_height_mm;
        assert!(h(0.80) - h(0.75) < h(0.15) - h(0.10));
    }

    #[test]
    fn monotone_and_partitioned() {
        let profiles: Vec<_> = RADII_MM.iter().map(|&r| wear_profile(r)).collect();
        for p in &profiles {
            assert!((p.thickness_mm() - 1.0).abs() < 1e-12);
            assert!(p.rollover_mm >= 0.0 && p.shear_mm >= 0.0 && p.rupture_mm >= 0.0);
        }
        for w in profiles.windows(2) {
            assert!(w[1].burr_height_mm >= w[0].burr_height_mm);
            assert!(w[1].mark_intensity <= w[0].mark_intensity);
            assert!(w[1].shear_fraction() >= w[0].shear_fraction());
            assert!(w[1].rollover_mm >= w[0].rollover_mm);
        }
        assert!(profiles[11..].iter().all(|p| p.mark_intensity == 0.0));
    }
}
