//! Descriptive statistics of repeated runs, Welch's one-tailed t-test and
//! confusion matrices.
//!
//! Accuracies are fractions throughout; percentages appear only in the
//! row-percent confusion output.

mod confusion;
mod describe;
mod tdist;
mod welch;

use serde::{Deserialize, Serialize};

pub use confusion::ConfusionMatrix;
pub use describe::{describe, quantile_sorted, DescriptiveStats, Moments, RunAccuracies};
pub use tdist::{inc_beta, ln_gamma, p_one_tailed, t_cdf, t_critical, t_pdf, t_sf};
pub use welch::{one_tailed_test, welch_df, welch_t, WelchTTest};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub a: DescriptiveStats,
    pub b: DescriptiveStats,
}

/// Comparison of model `a` against model `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model_a: String,
    pub model_b: String,
    pub descriptive: Descriptives,
    pub welch: WelchTTest,
}

impl ComparisonReport {
    pub fn new(a: &RunAccuracies, b: &RunAccuracies, alpha: f64) -> Result<Self> {
        Ok(ComparisonReport {
            model_a: a.label.clone(),
            model_b: b.label.clone(),
            descriptive: Descriptives {
                a: describe(&a.samples)?,
                b: describe(&b.samples)?,
            },
            welch: one_tailed_test(&a.moments()?, &b.moments()?, alpha)?,
        })
    }

    /// One-line human-readable decision.
    pub fn verdict(&self) -> String {
        let w = &self.welch;
        let decision = if w.reject { "reject H0" } else { "fail to reject H0" };
        format!(
            "{decision} (H0: mean accuracy of {} <= {}; t = {:.3}, df = {:.0}, t_crit = {:.3}, p = {:.3e}, alpha = {})",
            self.model_a, self.model_b, w.t_stat, w.df_floor, w.t_crit, w.p, w.alpha
        )
    }
}
