use alloc::format;

use serde::{Deserialize, Serialize};

use crate::math::{exp, ln, ln_gamma, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub n: usize,
    pub r: f64,
    pub p_value: f64,
}

/// Sample Pearson correlation with a two-sided p-value from the
/// t-transform on n - 2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Input(format!("pearson: lengths {} and {}", n, y.len())));
    }
    if n < 3 {
        return Err(Error::Input(format!("pearson needs at least 3 points, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("pearson: non-finite value".into()));
    }
    for (name, s) in [("x", x), ("y", y)] {
        if s.iter().all(|&v| v == s[0]) {
            return Err(Error::Input(format!(
                "pearson: series {name} is constant, correlation is undefined"
            )));
        }
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let r = (sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        student_t_two_sided(r * sqrt(df / (1.0 - r * r)), df)
    };
    Ok(Correlation { n, r, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_difference: f64,
    /// `None` when the differences have zero variance.
    pub t: Option<f64>,
    pub p_value: f64,
    pub significant_at_95: bool,
    pub degenerate: bool,
}

/// Paired two-sided Student's t-test on `a - b`.
///
/// Differences with zero spread are flagged degenerate: significant when
/// their common value is nonzero, not significant when all are zero.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::Input(format!("paired t-test: lengths {} and {}", n, b.len())));
    }
    if n < 2 {
        return Err(Error::Input(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let d: alloc::vec::Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("paired t-test: non-finite value".into()));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let sd = crate::math::sample_std(&d);
    let largest = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if largest == 0.0 {
        return Ok(PairedTTest {
            n,
            mean_difference: 0.0,
            t: None,
            p_value: 1.0,
            significant_at_95: false,
            degenerate: true,
        });
    }
    if sd <= 1e-12 * largest {
        return Ok(PairedTTest {
            n,
            mean_difference: mean,
            t: None,
            p_value: 0.0,
            significant_at_95: true,
            degenerate: true,
        });
    }
    let t = mean / (sd / sqrt(n as f64));
    let p_value = student_t_two_sided(t, (n - 1) as f64);
    Ok(PairedTTest {
        n,
        mean_difference: mean,
        t: Some(t),
        p_value,
        significant_at_95: p_value < 0.05,
        degenerate: false,
    })
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    regularized_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// I_x(a, b) by the continued fraction, evaluated with the modified Lentz
/// method on whichever side converges quickly.
fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = exp(ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * ln(x) + b * ln(1.0 - x));
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - (a + b) * x / (a + 1.0));
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 / clamp(1.0 + even * d);
        c = clamp(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 / clamp(1.0 + odd * d);
        c = clamp(1.0 + odd / c);
        let step = d * c;
        h *= step;
        if (step - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
