use serde::{Deserialize, Serialize};

use super::describe::Moments;
use super::tdist::{p_one_tailed, t_critical};
use crate::error::Result;

/// `(μ_a − μ_b) / √(σ_a²/N_a + σ_b²/N_b)`; zero when both means and
/// both spreads coincide.
pub fn welch_t(a: &Moments, b: &Moments) -> f64 {
    let se = (a.sd * a.sd / a.n as f64 + b.sd * b.sd / b.n as f64).sqrt();
    let diff = a.mean - b.mean;
    if se == 0.0 {
        return if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
    }
    diff / se
}

/// Welch–Satterthwaite degrees of freedom. Two zero-variance samples get
/// the pooled value `N_a + N_b − 2`.
pub fn welch_df(a: &Moments, b: &Moments) -> f64 {
    let va = a.sd * a.sd / a.n as f64;
    let vb = b.sd * b.sd / b.n as f64;
    if va + vb == 0.0 {
        return (a.n + b.n - 2) as f64;
    }
    (va + vb).powi(2) / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTTest {
    pub t_stat: f64,
    pub df_raw: f64,
    pub df_floor: f64,
    /// Critical value at `alpha` for the floored degrees of freedom.
    pub t_crit: f64,
    /// Upper-tail probability of `t_stat` at the raw degrees of freedom.
    pub p: f64,
    pub alpha: f64,
    pub reject: bool,
}

/// Tests `H0: μ_a ≤ μ_b` against `H1: μ_a > μ_b`; rejects iff `p < alpha`.
pub fn one_tailed_test(a: &Moments, b: &Moments, alpha: f64) -> Result<WelchTTest> {
    let t_stat = welch_t(a, b);
    let df_raw = welch_df(a, b);
    let df_floor = df_raw.floor().max(1.0);
    let t_crit = t_critical(alpha, df_floor)?;
    let p = p_one_tailed(t_stat, df_raw)?;
    Ok(WelchTTest {
        t_stat,
        df_raw,
        df_floor,
        t_crit,
        p,
        alpha,
        reject: p < alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(mean: f64, sd: f64, n: usize) -> Moments {
        Moments { mean, sd, n }
    }

    #[test]
    fn equal_variances_pool_degrees() {
        let a = m(1.0, 0.3, 12);
        assert!((welch_df(&a, &m(2.0, 0.3, 12)) - 22.0).abs() < 1e-12);
    }

    #[test]
    fn antisymmetric() {
        let (a, b) = (m(0.99, 0.002, 30), m(0.98, 0.004, 25));
        assert_eq!(welch_t(&a, &b), -welch_t(&b, &a));
    }

    #[test]
    fn identical_groups_fail_to_reject() {
        let a = m(0.5, 0.0, 10);
        let r = one_tailed_test(&a, &a, 0.01).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert!(!r.reject);
    }
}
