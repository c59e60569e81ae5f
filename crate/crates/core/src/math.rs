//! Scalar numerics on top of `libm`.

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target, computed without
/// forming the probability: `max(x, 0) - x t + ln(1 + e^{-|x|})`.
pub fn bce_with_logits(logit: f64, target: f64) -> f64 {
    let pos = if logit > 0.0 { logit } else { 0.0 };
    pos - logit * target + ln_1p(exp(-logit.abs()))
}

/// Derivative of [`bce_with_logits`] with respect to the logit.
pub fn bce_with_logits_grad(logit: f64, target: f64) -> f64 {
    sigmoid(logit) - target
}

/// In-place softmax, shifted by the maximum.
pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = exp(*x - max);
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

const INV_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact GELU, `x Φ(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x * INV_SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + erf(x * INV_SQRT_2));
    let pdf = INV_SQRT_2PI * exp(-0.5 * x * x);
    cdf + x * pdf
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    sqrt(ss / (xs.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_matches_probability_form_in_safe_range() {
        for &x in &[-3.0, -0.5, 0.0, 0.7, 4.0] {
            for &t in &[0.0, 1.0] {
                let p = 1.0 / (1.0 + libm::exp(-x));
                let naive = -(t * libm::log(p) + (1.0 - t) * libm::log(1.0 - p));
                assert!((bce_with_logits(x, t) - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bce_is_stable_for_extreme_logits() {
        assert!(bce_with_logits(1000.0, 1.0).abs() < 1e-12);
        assert!((bce_with_logits(-1000.0, 1.0) - 1000.0).abs() < 1e-9);
        assert!(bce_with_logits(-800.0, 0.0).is_finite());
    }

    #[test]
    fn gelu_grad_matches_central_difference() {
        let h = 1e-6;
        for &x in &[-2.5, -0.3, 0.0, 0.4, 3.0] {
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut v = [1.0, 2.0, -700.0, 3.5];
        softmax_in_place(&mut v);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
