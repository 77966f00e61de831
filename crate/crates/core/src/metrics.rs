//! Agreement scores between a reference labeling and an estimate.

use crate::assignment::Assignment;
use crate::baselines::ConfusionMatrix;
use crate::error::Result;
use crate::lsap;
use crate::math::{ln, sqrt, xlogx};
use crate::matrix::Mat;

/// Normalized mutual information, `I(z1; z2) / sqrt(H(z1) H(z2))`.
///
/// If either labeling has zero entropy the score is 1 when both do and 0
/// otherwise.
pub fn nmi(z1: &Assignment, z2: &Assignment) -> Result<f64> {
    let table = ConfusionMatrix::new(z1, z2)?;
    let n = table.total() as f64;
    if n == 0.0 {
        return Ok(1.0);
    }
    let entropy = |counts: &[u64]| -> f64 {
        -counts.iter().map(|&c| xlogx(c as f64 / n)).sum::<f64>()
    };
    let rows = table.row_totals();
    let cols = table.col_totals();
    let (h1, h2) = (entropy(&rows), entropy(&cols));
    if h1 <= 0.0 || h2 <= 0.0 {
        return Ok(if h1 <= 0.0 && h2 <= 0.0 { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for r in 0..table.rows() {
        for c in 0..table.cols() {
            let count = table.get(r, c);
            if count > 0 {
                let p = count as f64 / n;
                mi += p * ln(p * n * n / (rows[r] as f64 * cols[c] as f64));
            }
        }
    }
    Ok((mi / sqrt(h1 * h2)).clamp(0.0, 1.0))
}

/// Fraction of nodes whose true label is the majority true label of their
/// estimated cluster (ties to the lowest label).
pub fn ccr(z_true: &Assignment, z_hat: &Assignment) -> Result<f64> {
    if z_true.is_empty() && z_hat.is_empty() {
        return Ok(1.0);
    }
    Ok(majority_total(z_true, z_hat)? as f64 / z_true.len() as f64)
}

/// Nodes whose true class is not the majority class of their estimated
/// cluster: `N - sum over clusters of the largest true-class count`.
pub fn misclustered_count(z_true: &Assignment, z_hat: &Assignment) -> Result<usize> {
    Ok(z_true.len() - majority_total(z_true, z_hat)? as usize)
}

fn majority_total(z_true: &Assignment, z_hat: &Assignment) -> Result<u64> {
    let table = ConfusionMatrix::new(z_true, z_hat)?;
    Ok((0..table.cols())
        .map(|c| (0..table.rows()).map(|r| table.get(r, c)).max().unwrap_or(0))
        .sum())
}

/// Smallest fraction of disagreeing nodes over all relabelings of `z_hat`.
pub fn misclustering_rate(z_true: &Assignment, z_hat: &Assignment, k: usize) -> Result<f64> {
    if z_true.is_empty() && z_hat.is_empty() {
        return Ok(0.0);
    }
    let n_labels = k.max(z_true.k()).max(z_hat.k());
    let widen = |a: &Assignment| Assignment::new(a.labels().to_vec(), n_labels);
    let table = ConfusionMatrix::new(&widen(z_true)?, &widen(z_hat)?)?;
    let mut w = Mat::zeros(n_labels, n_labels);
    for r in 0..n_labels {
        for c in 0..n_labels {
            w[(r, c)] = table.get(r, c) as f64;
        }
    }
    let matching = lsap::solve_max(&w);
    let agree: u64 = matching.iter().enumerate().map(|(r, &c)| table.get(r, c)).sum();
    Ok((z_true.len() as u64 - agree) as f64 / z_true.len() as f64)
}
