use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Community labels for `N` nodes over `K` classes.
///
/// Labels are stored 0-based (`0..K`); file formats and user-facing output
/// use 1-based labels via [`Assignment::from_one_based`] and
/// [`Assignment::to_one_based`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

/// The planted labels of a synthetic or annotated graph.
pub type GroundTruth = Assignment;

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("number of classes must be positive"));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label, k });
        }
        Ok(Assignment { labels, k })
    }

    pub fn from_one_based(labels: &[usize], k: usize) -> Result<Self> {
        let zero_based = labels
            .iter()
            .map(|&l| {
                if l == 0 || l > k {
                    Err(Error::LabelOutOfRange { label: l, k })
                } else {
                    Ok(l - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Assignment::new(zero_based, k)
    }

    /// Every node in class 0.
    pub fn constant(n: usize, k: usize) -> Result<Self> {
        Assignment::new(vec![0; n], k)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l + 1).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Relabels with `perm[old] = new`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        Assignment {
            labels: self.labels.iter().map(|&l| perm[l]).collect(),
            k: self.k,
        }
    }

    /// Row-wise argmax of a responsibility matrix, ties to the lowest label.
    pub fn from_responsibilities(tau: &Mat) -> Self {
        let labels = (0..tau.rows())
            .map(|i| {
                let row = tau.row(i);
                let mut best = 0;
                for (q, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = q;
                    }
                }
                best
            })
            .collect();
        Assignment {
            labels,
            k: tau.cols(),
        }
    }

    /// One-hot responsibilities.
    pub fn to_hard_responsibilities(&self) -> Mat {
        let mut tau = Mat::zeros(self.len(), self.k);
        for (i, &l) in self.labels.iter().enumerate() {
            tau[(i, l)] = 1.0;
        }
        tau
    }

    /// Responsibilities with `1 - rho` on the own label and `rho / (K - 1)`
    /// elsewhere. With `K = 1` every row is `[1]`.
    pub fn to_soft_responsibilities(&self, rho: f64) -> Mat {
        if self.k == 1 {
            return Mat::filled(self.len(), 1, 1.0);
        }
        let off = rho / (self.k - 1) as f64;
        let mut tau = Mat::filled(self.len(), self.k, off);
        for (i, &l) in self.labels.iter().enumerate() {
            tau[(i, l)] = 1.0 - rho;
        }
        tau
    }
}
