//! Aggregation, single-layer fits and majority voting.

use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::graph::{Layer, MultiLayerGraph};
use crate::lsap;
use crate::matrix::Mat;
use crate::vem::{fit_mlsbm, FitResult, VemOptions};

/// Keeps a pair when it is an edge in strictly more than half the layers.
pub fn aggregate_mean(g: &MultiLayerGraph) -> Layer {
    aggregate_by(g, |count| 2 * count > g.n_layers())
}

/// Union of all layers.
pub fn aggregate_sparse(g: &MultiLayerGraph) -> Layer {
    aggregate_by(g, |count| count > 0)
}

fn aggregate_by<F: Fn(usize) -> bool>(g: &MultiLayerGraph, keep: F) -> Layer {
    let mut all: Vec<(usize, usize)> = g.layers().iter().flat_map(|l| l.edges().iter().copied()).collect();
    all.sort_unstable();
    let mut edges = Vec::new();
    let mut idx = 0;
    while idx < all.len() {
        let mut end = idx;
        while end < all.len() && all[end] == all[idx] {
            end += 1;
        }
        if keep(end - idx) {
            edges.push(all[idx]);
        }
        idx = end;
    }
    Layer::from_sorted_unique(g.n_nodes(), edges)
}

/// Standard (one-layer) blockmodel fit.
pub fn fit_single_layer_sbm(layer: &Layer, k: usize, init_tau: &Mat, opts: &VemOptions) -> Result<FitResult> {
    fit_mlsbm(&MultiLayerGraph::single(layer.clone()), k, init_tau, opts)
}

/// Contingency table: rows are labels of `a`, columns labels of `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(a: &Assignment, b: &Assignment) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        let (rows, cols) = (a.k(), b.k());
        let mut counts = vec![0u64; rows * cols];
        for (&x, &y) in a.labels().iter().zip(b.labels()) {
            counts[x * cols + y] += 1;
        }
        Ok(ConfusionMatrix { rows, cols, counts })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols + c]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        (0..self.rows).map(|r| (0..self.cols).map(|c| self.get(r, c)).sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols).map(|c| (0..self.rows).map(|r| self.get(r, c)).sum()).collect()
    }

    /// Bijection `perm[col] = row` over `max(rows, cols)` labels maximizing
    /// the matched count, preferring fixed points among optimal matchings.
    pub fn best_matching(&self) -> Vec<usize> {
        let n = self.rows.max(self.cols);
        let scale = (n + 1) as f64;
        let mut w = Mat::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let count = if r < self.rows && c < self.cols { self.get(r, c) } else { 0 };
                w[(r, c)] = scale * count as f64 + if r == c { 1.0 } else { 0.0 };
            }
        }
        let row_to_col = lsap::solve_max(&w);
        let mut perm = vec![0; n];
        for (r, &c) in row_to_col.iter().enumerate() {
            perm[c] = r;
        }
        perm
    }
}

/// Relabels `z` to agree with `z_ref` as much as possible. The result has
/// `max(k, z_ref.k(), z.k())` classes.
pub fn align_labels(z_ref: &Assignment, z: &Assignment, k: usize) -> Result<Assignment> {
    let n_labels = k.max(z_ref.k()).max(z.k());
    let widen = |a: &Assignment| Assignment::new(a.labels().to_vec(), n_labels);
    let confusion = ConfusionMatrix::new(&widen(z_ref)?, &widen(z)?)?;
    let perm = confusion.best_matching();
    Assignment::new(z.labels().iter().map(|&l| perm[l]).collect(), n_labels)
}

/// Aligns every assignment to the first and takes each node's most frequent
/// label, ties going to the lowest label.
pub fn majority_vote(assignments: &[Assignment], k: usize) -> Result<Assignment> {
    let first = assignments
        .first()
        .ok_or_else(|| Error::invalid("majority vote needs at least one assignment"))?;
    let aligned = assignments
        .iter()
        .map(|z| align_labels(first, z, k))
        .collect::<Result<Vec<_>>>()?;
    let n_labels = aligned[0].k();
    let mut votes = vec![0usize; n_labels];
    let labels = (0..first.len())
        .map(|i| {
            votes.iter_mut().for_each(|v| *v = 0);
            for z in &aligned {
                votes[z.label(i)] += 1;
            }
            let mut best = 0;
            for (l, &v) in votes.iter().enumerate() {
                if v > votes[best] {
                    best = l;
                }
            }
            best
        })
        .collect();
    Assignment::new(labels, n_labels)
}
