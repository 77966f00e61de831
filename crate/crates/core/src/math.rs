//! Scalar helpers on top of `libm`.

/// Smallest probability allowed inside a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// `ln(max(p, PROB_FLOOR))`: finite for every `p` in `[0, 1]` and exact at 1.
#[inline]
pub fn ln_prob(p: f64) -> f64 {
    ln(p.max(PROB_FLOOR))
}

/// `x * ln_prob(p)` with `0 * ln(.) = 0`.
#[inline]
pub fn xlogp(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * ln_prob(p)
    }
}

/// `x ln x` with `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * ln(x)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + ln_1p(exp(-x))
    } else {
        ln_1p(exp(x))
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    let p = clamp_prob(p);
    ln(p) - ln(1.0 - p)
}

/// Softmax of `scores` in place, subtracting the maximum first.
pub fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = exp(*s - max);
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}
