//! Divergences, minimax error rates and strong-consistency thresholds for
//! two-parameter (within `a/N`, between `b/N`) multi-layer blockmodels.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln, sqrt};

/// Returned in place of an infinite divergence.
pub const INFINITE_DIVERGENCE: f64 = 1e12;

/// Order-1/2 Rényi divergence between `Bernoulli(a/n)` and `Bernoulli(b/n)`:
/// `-2 ln(sqrt(ab)/n + sqrt((1 - a/n)(1 - b/n)))`.
pub fn renyi_half(a: f64, b: f64, n: f64) -> Result<f64> {
    for v in [a, b] {
        if !(0.0..=n).contains(&v) || !v.is_finite() {
            return Err(Error::invalid(alloc::format!(
                "degree parameter {v} outside [0, {n}]"
            )));
        }
    }
    let affinity = sqrt(a * b) / n + sqrt((1.0 - a / n) * (1.0 - b / n));
    if affinity <= 0.0 {
        return Ok(INFINITE_DIVERGENCE);
    }
    Ok((-2.0 * ln(affinity)).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceProfile {
    pub per_layer: Vec<f64>,
    /// Divergence of the aggregate graph with parameters `sum a`, `sum b`.
    pub aggregate: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub n: f64,
}

impl DivergenceProfile {
    pub fn total(&self) -> f64 {
        self.per_layer.iter().sum()
    }
}

pub fn divergence_profile(a: &[f64], b: &[f64], n: f64) -> Result<DivergenceProfile> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid("at least one layer is required"));
    }
    let per_layer = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| renyi_half(x, y, n))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = renyi_half(a.iter().sum(), b.iter().sum(), n)?;
    Ok(DivergenceProfile {
        per_layer,
        aggregate,
        a: a.to_vec(),
        b: b.to_vec(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Multilayer,
    Aggregate,
}

impl Model {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "multilayer" => Some(Model::Multilayer),
            "aggregate" => Some(Model::Aggregate),
            _ => None,
        }
    }
}

/// Largest admissible class-size imbalance `s`.
pub fn max_imbalance() -> f64 {
    sqrt(5.0 / 3.0)
}

/// `exp(-N I / 2)` for two classes and `exp(-N I / (s K))` otherwise, where
/// `I` is the summed per-layer divergence or the aggregate one.
pub fn minimax_rate(profile: &DivergenceProfile, k: usize, s: f64, model: Model) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("minimax rate needs K >= 2"));
    }
    if !(1.0..=max_imbalance() + 1e-15).contains(&s) {
        return Err(Error::invalid(alloc::format!("imbalance s = {s} outside [1, sqrt(5/3)]")));
    }
    let info = match model {
        Model::Multilayer => profile.total(),
        Model::Aggregate => profile.aggregate,
    };
    let denom = if k == 2 { 2.0 } else { s * k as f64 };
    Ok(exp(-profile.n * info / denom))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub margin: f64,
    /// `margin > 1`.
    pub above: bool,
}

/// Strong-consistency threshold for `a = alpha1 ln N`, `b = alpha2 ln N`.
pub fn threshold_strong(alpha1: &[f64], alpha2: &[f64], k: usize, model: Model) -> Result<Threshold> {
    if alpha1.len() != alpha2.len() {
        return Err(Error::LengthMismatch {
            expected: alpha1.len(),
            found: alpha2.len(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    if alpha1.iter().zip(alpha2).any(|(&x, &y)| !(x >= y && y >= 0.0)) {
        return Err(Error::invalid("threshold needs alpha1 >= alpha2 >= 0 in every layer"));
    }
    let gap = match model {
        Model::Multilayer => alpha1.iter().zip(alpha2).map(|(&x, &y)| sqrt(x) - sqrt(y)).sum(),
        Model::Aggregate => sqrt(alpha1.iter().sum()) - sqrt(alpha2.iter().sum::<f64>()),
    };
    let margin = gap / sqrt(k as f64);
    Ok(Threshold {
        margin,
        above: margin > 1.0,
    })
}
