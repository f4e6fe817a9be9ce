//! Student's t distribution through the regularized incomplete beta function.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction of the incomplete beta function, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

fn check_df(df: f64) -> Result<()> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("degrees of freedom {df} must be positive")))
    }
}

pub fn t_pdf(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    let ln = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln() - (df + 1.0) / 2.0 * (t * t / df).ln_1p();
    Ok(ln.exp())
}

/// Upper-tail probability `P(T > t)`.
pub fn t_sf(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() {
        return Err(Error::InvalidArgument("t statistic is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 0.0 } else { 1.0 });
    }
    let tail = 0.5 * inc_beta(df / 2.0, 0.5, df / (df + t * t));
    Ok(if t >= 0.0 { tail } else { 1.0 - tail })
}

pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    Ok(1.0 - t_sf(t, df)?)
}

/// One-tailed p-value of `t` under `H0: μ_a ≤ μ_b`.
pub fn p_one_tailed(t: f64, df: f64) -> Result<f64> {
    t_sf(t, df)
}

/// The `t` with upper-tail probability `alpha`.
pub fn t_critical(alpha: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("significance level {alpha} outside (0, 1)")));
    }
    if alpha > 0.5 {
        return Ok(-t_critical(1.0 - alpha, df)?);
    }
    // bracket, then Newton steps guarded by bisection
    let (mut lo, mut hi) = (0.0, 1.0);
    while t_sf(hi, df)? > alpha {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(hi);
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_sf(t, df)? - alpha;
        if f.abs() < 1e-15 {
            break;
        }
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t + f / t_pdf(t, df)?;
        t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_at_zero() {
        assert!((p_one_tailed(0.0, 7.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((t_cdf(-1.3, 4.0).unwrap() + t_cdf(1.3, 4.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cauchy_closed_form() {
        // one degree of freedom is the Cauchy distribution
        let t = 2.0f64;
        let expected = 0.5 - t.atan() / PI;
        assert!((t_sf(t, 1.0).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(t_critical(0.0, 3.0).is_err());
        assert!(t_critical(0.05, 0.0).is_err());
        assert!(p_one_tailed(1.0, -2.0).is_err());
    }
}
