//! Blockmodel likelihoods and estimators shared by both models.
//!
//! Most quantities only depend on the data through per-block totals: the
//! number of node pairs `n_ql` between classes `q <= l` and, per layer, the
//! number of edges `S_qlm` among those pairs. [`BlockTotals`] holds them for
//! hard labels, soft responsibilities, or expected adjacency alike, so the
//! same likelihood and restricted-fit code serves fixed-`z` estimation,
//! the variational M-steps, and the expected-likelihood identities.

use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::graph::MultiLayerGraph;
use crate::lbfgs::{self, LbfgsOptions};
use crate::math::{clamp_prob, ln, logit, sigmoid, softplus, xlogp};
use crate::matrix::Mat;

/// `M` symmetric `K x K` matrices, one per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBlocks {
    n_layers: usize,
    k: usize,
    data: Vec<f64>,
}

impl LayerBlocks {
    pub fn zeros(n_layers: usize, k: usize) -> Self {
        Self::filled(n_layers, k, 0.0)
    }

    pub fn filled(n_layers: usize, k: usize, value: f64) -> Self {
        LayerBlocks {
            n_layers,
            k,
            data: vec![value; n_layers * k * k],
        }
    }

    /// From nested `[m][q][l]` values; symmetry is checked.
    pub fn from_nested(values: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_layers = values.len();
        let k = values.first().map_or(0, Vec::len);
        let mut out = LayerBlocks::zeros(n_layers, k);
        for (m, layer) in values.iter().enumerate() {
            if layer.len() != k || layer.iter().any(|r| r.len() != k) {
                return Err(Error::invalid("block matrices must all be K x K"));
            }
            for q in 0..k {
                for l in 0..k {
                    if (layer[q][l] - layer[l][q]).abs() > 1e-12 {
                        return Err(Error::invalid("block matrix is not symmetric"));
                    }
                    out.data[(m * k + q) * k + l] = layer[q][l];
                }
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, m: usize, q: usize, l: usize) -> f64 {
        self.data[(m * self.k + q) * self.k + l]
    }

    /// Sets `(q, l)` and `(l, q)`.
    #[inline]
    pub fn set(&mut self, m: usize, q: usize, l: usize, value: f64) {
        let k = self.k;
        self.data[(m * k + q) * k + l] = value;
        self.data[(m * k + l) * k + q] = value;
    }

    #[inline]
    fn add(&mut self, m: usize, q: usize, l: usize, value: f64) {
        let k = self.k;
        self.data[(m * k + q) * k + l] += value;
        if q != l {
            self.data[(m * k + l) * k + q] += value;
        }
    }

    /// The `K x K` slice of layer `m`, row-major.
    pub fn layer(&self, m: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.data[m * kk..(m + 1) * kk]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs_diff(&self, other: &LayerBlocks) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Relabels blocks with `perm[old] = new`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut out = LayerBlocks::zeros(self.n_layers, self.k);
        for m in 0..self.n_layers {
            for q in 0..self.k {
                for l in 0..self.k {
                    out.set(m, perm[q], perm[l], self.get(m, q, l));
                }
            }
        }
        out
    }

    fn validate_probabilities(&self) -> Result<()> {
        match self.data.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            Some(&p) => Err(Error::InvalidProbability(p)),
            None => Ok(()),
        }
    }
}

/// Parameters of the unrestricted multi-layer blockmodel.
#[derive(Debug, Clone, PartialEq)]
pub struct MlsbmParams {
    pub alpha: Vec<f64>,
    pub pi: LayerBlocks,
}

impl MlsbmParams {
    pub fn new(alpha: Vec<f64>, pi: LayerBlocks) -> Result<Self> {
        if alpha.len() != pi.k() {
            return Err(Error::LengthMismatch {
                expected: pi.k(),
                found: alpha.len(),
            });
        }
        pi.validate_probabilities()?;
        let total: f64 = alpha.iter().sum();
        if alpha.iter().any(|&a| a < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("alpha must lie on the probability simplex"));
        }
        Ok(MlsbmParams { alpha, pi })
    }

    /// Uniform class weights.
    pub fn with_uniform_alpha(pi: LayerBlocks) -> Result<Self> {
        let k = pi.k();
        MlsbmParams::new(vec![1.0 / k as f64; k], pi)
    }
}

/// Constant of the parameter box `|pi|, |beta| <= C ln(M N^2)`.
pub const BOX_C: f64 = 1.0;

/// Half-width of the parameter box for a graph with `n_nodes` nodes and
/// `n_layers` layers.
pub fn box_bound(n_nodes: usize, n_layers: usize) -> f64 {
    let n = n_nodes as f64;
    BOX_C * ln(n_layers as f64 * n * n).max(1.0)
}

/// Parameters of the restricted model: `logit P = pi[q][l] + beta[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmlsbmParams {
    pi: Mat,
    beta: Vec<f64>,
}

impl RmlsbmParams {
    pub fn new(pi: Mat, beta: Vec<f64>) -> Result<Self> {
        let k = pi.rows();
        if pi.cols() != k || k == 0 {
            return Err(Error::invalid("pi must be a non-empty square matrix"));
        }
        if beta.is_empty() {
            return Err(Error::invalid("beta needs at least one layer"));
        }
        for q in 0..k {
            for l in 0..k {
                if !pi[(q, l)].is_finite() || (pi[(q, l)] - pi[(l, q)]).abs() > 1e-12 {
                    return Err(Error::invalid("pi must be finite and symmetric"));
                }
            }
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("beta must be finite"));
        }
        Ok(RmlsbmParams { pi, beta })
    }

    pub fn zeros(k: usize, n_layers: usize) -> Self {
        RmlsbmParams {
            pi: Mat::zeros(k, k),
            beta: vec![0.0; n_layers],
        }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.pi.rows()
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.beta.len()
    }

    pub fn pi(&self) -> &Mat {
        &self.pi
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `pi[q][l] + beta[m]`.
    #[inline]
    pub fn theta(&self, m: usize, q: usize, l: usize) -> f64 {
        self.pi[(q, l)] + self.beta[m]
    }

    /// Edge probability of the pair `(q, l)` in layer `m`.
    #[inline]
    pub fn phi(&self, m: usize, q: usize, l: usize) -> f64 {
        phi_transform(self.pi[(q, l)], self.beta[m])
    }

    /// The equivalent unrestricted probabilities.
    pub fn to_probabilities(&self) -> LayerBlocks {
        let k = self.k();
        let mut out = LayerBlocks::zeros(self.n_layers(), k);
        for m in 0..self.n_layers() {
            for q in 0..k {
                for l in q..k {
                    out.set(m, q, l, self.phi(m, q, l));
                }
            }
        }
        out
    }

    /// Moves the mean of `beta` into `pi`; the probabilities are unchanged.
    pub fn recenter(&mut self) {
        let mean = self.beta.iter().sum::<f64>() / self.beta.len() as f64;
        self.beta.iter_mut().for_each(|b| *b -= mean);
        let k = self.k();
        for q in 0..k {
            for l in 0..k {
                self.pi[(q, l)] += mean;
            }
        }
    }

    /// Recenters, then clamps every parameter into `[-bound, bound]`.
    pub fn clamp_to_box(&mut self, bound: f64) {
        self.recenter();
        if self.beta.iter().any(|b| b.abs() > bound) {
            self.beta.iter_mut().for_each(|b| *b = b.clamp(-bound, bound));
            let mean = self.beta.iter().sum::<f64>() / self.beta.len() as f64;
            self.beta.iter_mut().for_each(|b| *b -= mean);
        }
        let k = self.k();
        for q in 0..k {
            for l in 0..k {
                self.pi[(q, l)] = self.pi[(q, l)].clamp(-bound, bound);
            }
        }
    }

    /// `(pi + c, beta - c)`: same probabilities, different centering.
    pub fn shifted(&self, c: f64) -> Self {
        let k = self.k();
        let mut out = self.clone();
        for q in 0..k {
            for l in 0..k {
                out.pi[(q, l)] += c;
            }
        }
        out.beta.iter_mut().for_each(|b| *b -= c);
        out
    }

    /// Free parameters after the `sum(beta) = 0` constraint.
    pub fn free_parameter_count(&self) -> usize {
        let k = self.k();
        k * (k + 1) / 2 + self.n_layers() - 1
    }

    /// Upper triangle of `pi` (row-major, `q <= l`) followed by `beta`.
    pub fn to_vector(&self) -> Vec<f64> {
        let k = self.k();
        let mut v = Vec::with_capacity(k * (k + 1) / 2 + self.n_layers());
        for q in 0..k {
            for l in q..k {
                v.push(self.pi[(q, l)]);
            }
        }
        v.extend_from_slice(&self.beta);
        v
    }

    pub fn from_vector(k: usize, n_layers: usize, v: &[f64]) -> Self {
        let tri = k * (k + 1) / 2;
        assert_eq!(v.len(), tri + n_layers, "parameter vector has wrong length");
        let mut pi = Mat::zeros(k, k);
        let mut idx = 0;
        for q in 0..k {
            for l in q..k {
                pi[(q, l)] = v[idx];
                pi[(l, q)] = v[idx];
                idx += 1;
            }
        }
        RmlsbmParams {
            pi,
            beta: v[tri..].to_vec(),
        }
    }

    /// Relabels blocks with `perm[old] = new`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let k = self.k();
        let mut pi = Mat::zeros(k, k);
        for q in 0..k {
            for l in 0..k {
                pi[(perm[q], perm[l])] = self.pi[(q, l)];
            }
        }
        RmlsbmParams {
            pi,
            beta: self.beta.clone(),
        }
    }

    /// Starting point from moment estimates: `pi` is the logit of each
    /// block's edge rate pooled over layers, `beta` the centered logit of each
    /// layer's density.
    pub fn from_moments(totals: &BlockTotals, bound: f64) -> Self {
        let k = totals.k();
        let n_layers = totals.n_layers();
        let all_pairs = totals.total_pairs();
        let overall = if all_pairs > 0.0 {
            (0..n_layers).map(|m| totals.layer_edges(m)).sum::<f64>() / (n_layers as f64 * all_pairs)
        } else {
            0.5
        };
        let mut pi = Mat::zeros(k, k);
        for q in 0..k {
            for l in q..k {
                let n = totals.pairs(q, l);
                let rate = if n > 0.0 {
                    (0..n_layers).map(|m| totals.edges(m, q, l)).sum::<f64>() / (n_layers as f64 * n)
                } else {
                    overall
                };
                pi[(q, l)] = logit(rate);
                pi[(l, q)] = pi[(q, l)];
            }
        }
        let beta: Vec<f64> = (0..n_layers)
            .map(|m| {
                if all_pairs > 0.0 {
                    logit(totals.layer_edges(m) / all_pairs)
                } else {
                    0.0
                }
            })
            .collect();
        let mut params = RmlsbmParams { pi, beta };
        let mean = params.beta.iter().sum::<f64>() / n_layers as f64;
        params.beta.iter_mut().for_each(|b| *b -= mean);
        params.clamp_to_box(bound);
        params
    }
}

/// Class sizes and pair counts of a hard assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCounts {
    pub class_sizes: Vec<usize>,
    k: usize,
    pair_counts: Vec<u64>,
}

impl BlockCounts {
    /// `n_qq = N_q (N_q - 1) / 2`, `n_ql = N_q N_l` for `q != l`.
    pub fn pair_count(&self, q: usize, l: usize) -> u64 {
        self.pair_counts[q * self.k + l]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `sum over q <= l of n_ql`, always `N (N - 1) / 2`.
    pub fn total_pairs(&self) -> u64 {
        (0..self.k)
            .flat_map(|q| (q..self.k).map(move |l| (q, l)))
            .map(|(q, l)| self.pair_count(q, l))
            .sum()
    }
}

pub fn block_counts(z: &Assignment) -> BlockCounts {
    let k = z.k();
    let sizes = z.class_sizes();
    let mut pair_counts = vec![0u64; k * k];
    for q in 0..k {
        for l in 0..k {
            let (a, b) = (sizes[q] as u64, sizes[l] as u64);
            pair_counts[q * k + l] = if q == l { a * a.saturating_sub(1) / 2 } else { a * b };
        }
    }
    BlockCounts {
        class_sizes: sizes,
        k,
        pair_counts,
    }
}

/// Dense per-layer edge probabilities `P[m][i][j]` (diagonal ignored).
#[derive(Debug, Clone, PartialEq)]
pub struct PairProbabilities {
    n_nodes: usize,
    layers: Vec<Mat>,
}

impl PairProbabilities {
    pub fn new(layers: Vec<Mat>) -> Result<Self> {
        let n = layers.first().map_or(0, Mat::rows);
        for p in &layers {
            if p.rows() != n || p.cols() != n {
                return Err(Error::invalid("probability layers must all be N x N"));
            }
            for i in 0..n {
                for j in 0..n {
                    let v = p[(i, j)];
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidProbability(v));
                    }
                    if (v - p[(j, i)]).abs() > 1e-12 {
                        return Err(Error::invalid("probability layer is not symmetric"));
                    }
                }
            }
        }
        Ok(PairProbabilities { n_nodes: n, layers })
    }

    /// `P[m][i][j] = pi[m][z_i][z_j]`.
    pub fn block_constant(z: &Assignment, pi: &LayerBlocks) -> Self {
        let n = z.len();
        let layers = (0..pi.n_layers())
            .map(|m| {
                let mut p = Mat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            p[(i, j)] = pi.get(m, z.label(i), z.label(j));
                        }
                    }
                }
                p
            })
            .collect();
        PairProbabilities { n_nodes: n, layers }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize, j: usize) -> f64 {
        self.layers[m][(i, j)]
    }
}

/// Sufficient statistics of a blockmodel fit: pair counts `n_ql` and
/// per-layer edge totals `S_qlm`, both over unordered node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTotals {
    k: usize,
    pairs: Mat,
    edges: LayerBlocks,
}

impl BlockTotals {
    pub fn from_labels(g: &MultiLayerGraph, z: &Assignment) -> Self {
        let k = z.k();
        let counts = block_counts(z);
        let mut pairs = Mat::zeros(k, k);
        for q in 0..k {
            for l in 0..k {
                pairs[(q, l)] = counts.pair_count(q, l) as f64;
            }
        }
        let mut edges = LayerBlocks::zeros(g.n_layers(), k);
        for (m, layer) in g.layers().iter().enumerate() {
            for &(i, j) in layer.edges() {
                edges.add(m, z.label(i), z.label(j), 1.0);
            }
        }
        BlockTotals { k, pairs, edges }
    }

    /// Expected totals under responsibilities `tau`: pairs `(i, j)` with
    /// `i < j` contribute `tau[i][q] tau[j][l]` to every ordered `(q, l)`.
    pub fn from_responsibilities(g: &MultiLayerGraph, tau: &Mat) -> Self {
        let k = tau.cols();
        let totals = tau.column_sums();
        let mut cross = Mat::zeros(k, k);
        for i in 0..tau.rows() {
            let row = tau.row(i);
            for q in 0..k {
                for l in q..k {
                    cross[(q, l)] += row[q] * row[l];
                }
            }
        }
        let mut pairs = Mat::zeros(k, k);
        for q in 0..k {
            for l in q..k {
                let w = totals[q] * totals[l] - cross[(q, l)];
                let v = if q == l { 0.5 * w } else { w };
                pairs[(q, l)] = v.max(0.0);
                pairs[(l, q)] = pairs[(q, l)];
            }
        }
        let mut edges = LayerBlocks::zeros(g.n_layers(), k);
        let mut ordered = vec![0.0; k * k];
        for (m, layer) in g.layers().iter().enumerate() {
            ordered.iter_mut().for_each(|v| *v = 0.0);
            for &(i, j) in layer.edges() {
                let (ri, rj) = (tau.row(i), tau.row(j));
                for q in 0..k {
                    let a = ri[q];
                    if a == 0.0 {
                        continue;
                    }
                    let out = &mut ordered[q * k..(q + 1) * k];
                    for (o, b) in out.iter_mut().zip(rj) {
                        *o += a * b;
                    }
                }
            }
            for q in 0..k {
                edges.set(m, q, q, ordered[q * k + q]);
                for l in q + 1..k {
                    edges.set(m, q, l, ordered[q * k + l] + ordered[l * k + q]);
                }
            }
        }
        BlockTotals { k, pairs, edges }
    }

    /// Totals with the expected adjacency `P` in place of `A`.
    pub fn from_probabilities(p: &PairProbabilities, z: &Assignment) -> Self {
        let k = z.k();
        let counts = block_counts(z);
        let mut pairs = Mat::zeros(k, k);
        for q in 0..k {
            for l in 0..k {
                pairs[(q, l)] = counts.pair_count(q, l) as f64;
            }
        }
        let mut edges = LayerBlocks::zeros(p.n_layers(), k);
        for m in 0..p.n_layers() {
            for i in 0..p.n_nodes() {
                for j in i + 1..p.n_nodes() {
                    edges.add(m, z.label(i), z.label(j), p.get(m, i, j));
                }
            }
        }
        BlockTotals { k, pairs, edges }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.edges.n_layers()
    }

    #[inline]
    pub fn pairs(&self, q: usize, l: usize) -> f64 {
        self.pairs[(q, l)]
    }

    #[inline]
    pub fn edges(&self, m: usize, q: usize, l: usize) -> f64 {
        self.edges.get(m, q, l)
    }

    pub fn total_pairs(&self) -> f64 {
        (0..self.k)
            .flat_map(|q| (q..self.k).map(move |l| (q, l)))
            .map(|(q, l)| self.pairs(q, l))
            .sum()
    }

    /// Edge total of layer `m` summed over all blocks.
    pub fn layer_edges(&self, m: usize) -> f64 {
        (0..self.k)
            .flat_map(|q| (q..self.k).map(move |l| (q, l)))
            .map(|(q, l)| self.edges(m, q, l))
            .sum()
    }

    /// Same pair counts with every edge total multiplied by `factor`.
    pub fn with_scaled_edges(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.edges.data.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `S_qlm / n_ql`, zero for empty blocks.
    pub fn edge_rates(&self) -> LayerBlocks {
        let mut out = LayerBlocks::zeros(self.n_layers(), self.k);
        for m in 0..self.n_layers() {
            for q in 0..self.k {
                for l in q..self.k {
                    let n = self.pairs(q, l);
                    if n > 0.0 {
                        out.set(m, q, l, (self.edges(m, q, l) / n).clamp(0.0, 1.0));
                    }
                }
            }
        }
        out
    }

    /// `sum_{q<=l, m} S log pi + (n - S) log(1 - pi)`.
    pub fn log_likelihood(&self, pi: &LayerBlocks) -> f64 {
        let mut total = 0.0;
        for m in 0..self.n_layers() {
            for q in 0..self.k {
                for l in q..self.k {
                    let s = self.edges(m, q, l);
                    let n = self.pairs(q, l);
                    let p = pi.get(m, q, l);
                    total += xlogp(s, p) + xlogp(n - s, 1.0 - p);
                }
            }
        }
        total
    }

    /// `sum_{q<=l, m} S theta - n log(1 + e^theta)`.
    pub fn restricted_log_likelihood(&self, params: &RmlsbmParams) -> f64 {
        let mut total = 0.0;
        for m in 0..self.n_layers() {
            for q in 0..self.k {
                for l in q..self.k {
                    let theta = params.theta(m, q, l);
                    total += self.edges(m, q, l) * theta - self.pairs(q, l) * softplus(theta);
                }
            }
        }
        total
    }

    /// Gradient of [`BlockTotals::restricted_log_likelihood`].
    pub fn restricted_gradient(&self, params: &RmlsbmParams) -> RestrictedGradient {
        let k = self.k;
        let n_layers = self.n_layers();
        let mut pi = vec![0.0; k * (k + 1) / 2];
        let mut beta = vec![0.0; n_layers];
        for m in 0..n_layers {
            let mut idx = 0;
            for q in 0..k {
                for l in q..k {
                    let r = self.edges(m, q, l) - self.pairs(q, l) * sigmoid(params.theta(m, q, l));
                    pi[idx] += r;
                    beta[m] += r;
                    idx += 1;
                }
            }
        }
        RestrictedGradient { pi, beta }
    }
}

/// Gradient of a restricted log-likelihood: the `q <= l` entries of `pi`
/// (row-major) and one entry per layer for `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedGradient {
    pub pi: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RestrictedGradient {
    pub fn inf_norm(&self) -> f64 {
        self.pi
            .iter()
            .chain(&self.beta)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Bernoulli Kullback-Leibler divergence `D(a || b)` with both arguments
/// clamped to `[1e-12, 1 - 1e-12]`.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    let (a, b) = (clamp_prob(a), clamp_prob(b));
    let d = a * ln(a / b) + (1.0 - a) * ln((1.0 - a) / (1.0 - b));
    d.max(0.0)
}

/// `D(a || b)` with `0 log 0 = 0`, for `b` strictly inside `(0, 1)`.
fn bernoulli_kl_exact(a: f64, b: f64) -> f64 {
    let first = if a > 0.0 { a * ln(a / b) } else { 0.0 };
    let second = if a < 1.0 {
        (1.0 - a) * ln((1.0 - a) / (1.0 - b))
    } else {
        0.0
    };
    first + second
}

/// Maximum-likelihood block probabilities for fixed labels; empty blocks get 0.
pub fn mle_pi_hat(g: &MultiLayerGraph, z: &Assignment) -> LayerBlocks {
    BlockTotals::from_labels(g, z).edge_rates()
}

/// Block averages of the expected adjacency.
pub fn pi_bar(p: &PairProbabilities, z: &Assignment) -> LayerBlocks {
    BlockTotals::from_probabilities(p, z).edge_rates()
}

/// `sum_m sum_{i<j} A log pi + (1 - A) log(1 - pi)` at labels `z`.
pub fn log_likelihood_mlsbm(g: &MultiLayerGraph, z: &Assignment, pi: &LayerBlocks) -> f64 {
    BlockTotals::from_labels(g, z).log_likelihood(pi)
}

/// The likelihood maximized over `pi` for fixed labels.
pub fn profile_log_likelihood(g: &MultiLayerGraph, z: &Assignment) -> f64 {
    let totals = BlockTotals::from_labels(g, z);
    totals.log_likelihood(&totals.edge_rates())
}

/// Expected log-likelihood with `P` in place of `A`.
pub fn expected_log_likelihood(p: &PairProbabilities, z: &Assignment, pi: &LayerBlocks) -> f64 {
    let mut total = 0.0;
    for m in 0..p.n_layers() {
        for i in 0..p.n_nodes() {
            for j in i + 1..p.n_nodes() {
                let prob = pi.get(m, z.label(i), z.label(j));
                let pij = p.get(m, i, j);
                total += xlogp(pij, prob) + xlogp(1.0 - pij, 1.0 - prob);
            }
        }
    }
    total
}

/// Per-pair sums `sum A log(x) + (1 - A) log(1 - x)`, and the edge term
/// `sum A logit(y)` and its expectation under `P`.
fn pairwise_terms<F, G>(
    g: &MultiLayerGraph,
    p: &PairProbabilities,
    z: &Assignment,
    fitted: F,
    expected: G,
) -> [f64; 4]
where
    F: Fn(usize, usize, usize) -> f64,
    G: Fn(usize, usize, usize) -> f64,
{
    let (mut l_obs, mut l_exp, mut x, mut ex) = (0.0, 0.0, 0.0, 0.0);
    for m in 0..g.n_layers() {
        let layer = g.layer(m);
        for i in 0..g.n_nodes() {
            for j in i + 1..g.n_nodes() {
                let (q, l) = (z.label(i), z.label(j));
                let a = if layer.has_edge(i, j) { 1.0 } else { 0.0 };
                let hat = fitted(m, q, l);
                let bar = expected(m, q, l);
                let pij = p.get(m, i, j);
                l_obs += xlogp(a, hat) + xlogp(1.0 - a, 1.0 - hat);
                l_exp += xlogp(pij, bar) + xlogp(1.0 - pij, 1.0 - bar);
                let lg = ln(bar) - ln(1.0 - bar);
                x += a * lg;
                ex += pij * lg;
            }
        }
    }
    [l_obs, l_exp, x, ex]
}

/// Residual of the decomposition
/// `l(A; z) - lbar_P(z) = sum n_ql D(pihat || pibar) + X - E X`
/// with `X = sum A logit(pibar)`. `P` must lie strictly inside `(0, 1)`.
pub fn decomposition_residual(g: &MultiLayerGraph, p: &PairProbabilities, z: &Assignment) -> f64 {
    let hat = mle_pi_hat(g, z);
    let bar = pi_bar(p, z);
    let counts = block_counts(z);
    let [l_obs, l_exp, x, ex] = pairwise_terms(
        g,
        p,
        z,
        |m, q, l| hat.get(m, q, l),
        |m, q, l| bar.get(m, q, l),
    );
    let mut divergence = 0.0;
    for m in 0..g.n_layers() {
        for q in 0..z.k() {
            for l in q..z.k() {
                let n = counts.pair_count(q, l) as f64;
                if n > 0.0 {
                    divergence += n * bernoulli_kl_exact(hat.get(m, q, l), bar.get(m, q, l));
                }
            }
        }
    }
    ((l_obs - l_exp) - (divergence + x - ex)).abs()
}

/// The restricted analogue of [`decomposition_residual`]: `phi_hat` is the
/// restricted fit to `A`, `phi_bar` the restricted fit to `P`.
pub fn restricted_decomposition_residual(
    g: &MultiLayerGraph,
    p: &PairProbabilities,
    z: &Assignment,
    opts: &RestrictedOptions,
) -> f64 {
    let bound = box_bound(g.n_nodes(), g.n_layers());
    let observed = BlockTotals::from_labels(g, z);
    let expected = BlockTotals::from_probabilities(p, z);
    let hat = fit_restricted(&observed, &RmlsbmParams::from_moments(&observed, bound), opts, bound).params;
    let bar = fit_restricted(&expected, &RmlsbmParams::from_moments(&expected, bound), opts, bound).params;
    let [l_obs, l_exp, x, ex] = pairwise_terms(
        g,
        p,
        z,
        |m, q, l| hat.phi(m, q, l),
        |m, q, l| bar.phi(m, q, l),
    );
    let counts = block_counts(z);
    let mut divergence = 0.0;
    for m in 0..g.n_layers() {
        for q in 0..z.k() {
            for l in q..z.k() {
                let n = counts.pair_count(q, l) as f64;
                if n > 0.0 {
                    divergence += n * bernoulli_kl_exact(hat.phi(m, q, l), bar.phi(m, q, l));
                }
            }
        }
    }
    ((l_obs - l_exp) - (divergence + x - ex)).abs()
}

/// `exp(pi + beta) / (1 + exp(pi + beta))`.
#[inline]
pub fn phi_transform(pi: f64, beta: f64) -> f64 {
    sigmoid(pi + beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RestrictedOptions {
    pub lbfgs: LbfgsOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedFit {
    pub params: RmlsbmParams,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub grad_inf_norm: f64,
    /// False when the optimizer stopped on its budget or a failed line
    /// search; `params` is then the best iterate found.
    pub converged: bool,
}

/// Maximizes the restricted log-likelihood of `totals` from `warm`, then
/// recenters `beta` and clamps into the `[-bound, bound]` box.
pub fn fit_restricted(
    totals: &BlockTotals,
    warm: &RmlsbmParams,
    opts: &RestrictedOptions,
    bound: f64,
) -> RestrictedFit {
    let k = totals.k();
    let n_layers = totals.n_layers();
    let tri = k * (k + 1) / 2;
    // Optimize over (pi, beta_0..beta_{M-2}) with beta_{M-1} = -sum(others):
    // the objective is flat along (pi + c, beta - c), so fixing the mean of
    // beta removes the only degenerate direction.
    let free = n_layers - 1;
    let expand = |x: &[f64], m: usize| -> f64 {
        if m < free {
            x[tri + m]
        } else {
            -x[tri..tri + free].iter().sum::<f64>()
        }
    };
    let objective = |x: &[f64], grad: &mut [f64]| {
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut value = 0.0;
        for m in 0..n_layers {
            let beta = expand(x, m);
            let mut idx = 0;
            let mut layer_grad = 0.0;
            for q in 0..k {
                for l in q..k {
                    let theta = x[idx] + beta;
                    let s = totals.edges(m, q, l);
                    let n = totals.pairs(q, l);
                    value -= s * theta - n * softplus(theta);
                    let r = s - n * sigmoid(theta);
                    grad[idx] -= r;
                    layer_grad -= r;
                    idx += 1;
                }
            }
            if m < free {
                grad[tri + m] += layer_grad;
            } else {
                grad[tri..tri + free].iter_mut().for_each(|g| *g -= layer_grad);
            }
        }
        value
    };
    let mut centered = warm.clone();
    centered.recenter();
    let mut x0 = centered.to_vector();
    x0.truncate(tri + free);
    let report = lbfgs::minimize(objective, x0, &opts.lbfgs);
    let mut x = report.x.clone();
    x.push(expand(&report.x, free));
    let mut params = RmlsbmParams::from_vector(k, n_layers, &x);
    params.clamp_to_box(bound);
    RestrictedFit {
        log_likelihood: totals.restricted_log_likelihood(&params),
        grad_inf_norm: totals.restricted_gradient(&params).inf_norm(),
        params,
        iterations: report.iterations,
        converged: report.converged,
    }
}

/// Restricted maximum-likelihood estimate for fixed labels.
pub fn rmle_fixed_z(g: &MultiLayerGraph, z: &Assignment, opts: &RestrictedOptions) -> RestrictedFit {
    let bound = box_bound(g.n_nodes(), g.n_layers());
    let totals = BlockTotals::from_labels(g, z);
    fit_restricted(&totals, &RmlsbmParams::from_moments(&totals, bound), opts, bound)
}

/// Gaps in the restricted estimating equations, model minus observed.
///
/// The first `M` entries are per layer, normalized by the number of dyads
/// `N (N - 1) / 2`; the remaining `K (K + 1) / 2` entries are per block pair
/// `q <= l`, normalized by `M n_ql` (zero for empty blocks).
pub fn estimating_residuals(g: &MultiLayerGraph, z: &Assignment, params: &RmlsbmParams) -> Vec<f64> {
    let totals = BlockTotals::from_labels(g, z);
    let k = z.k();
    let n_layers = g.n_layers();
    let dyads = totals.total_pairs();
    let mut out = Vec::with_capacity(n_layers + k * (k + 1) / 2);
    for m in 0..n_layers {
        let mut gap = 0.0;
        for q in 0..k {
            for l in q..k {
                gap += totals.pairs(q, l) * params.phi(m, q, l) - totals.edges(m, q, l);
            }
        }
        out.push(if dyads > 0.0 { gap / dyads } else { 0.0 });
    }
    for q in 0..k {
        for l in q..k {
            let n = totals.pairs(q, l);
            if n == 0.0 {
                out.push(0.0);
                continue;
            }
            let gap: f64 = (0..n_layers)
                .map(|m| n * params.phi(m, q, l) - totals.edges(m, q, l))
                .sum();
            out.push(gap / (n_layers as f64 * n));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Layer;

    fn graph(n: usize, layers: &[&[(usize, usize)]]) -> MultiLayerGraph {
        let lists: Vec<Vec<(usize, usize)>> = layers.iter().map(|l| l.to_vec()).collect();
        MultiLayerGraph::from_edge_lists(n, &lists).unwrap().0
    }

    #[test]
    fn kl_examples() {
        assert_eq!(bernoulli_kl(0.5, 0.5), 0.0);
        assert!((bernoulli_kl(0.5, 0.25) - 0.143_841_036_225_890_1).abs() < 1e-12);
        assert!((bernoulli_kl(0.0, 0.5) - core::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn block_count_examples() {
        let c = block_counts(&Assignment::new(vec![0, 0, 1, 1], 2).unwrap());
        assert_eq!(c.class_sizes, vec![2, 2]);
        assert_eq!((c.pair_count(0, 0), c.pair_count(1, 1), c.pair_count(0, 1)), (1, 1, 4));
        let c = block_counts(&Assignment::new(vec![0, 0, 0], 1).unwrap());
        assert_eq!(c.pair_count(0, 0), 3);
        let c = block_counts(&Assignment::new(vec![0, 1, 2], 3).unwrap());
        for q in 0..3 {
            assert_eq!(c.pair_count(q, q), 0);
            for l in 0..3 {
                if l != q {
                    assert_eq!(c.pair_count(q, l), 1);
                }
            }
        }
        assert_eq!(c.total_pairs(), 3);
    }

    #[test]
    fn pi_hat_examples() {
        let z = Assignment::new(vec![0, 0, 1], 2).unwrap();
        let g = graph(3, &[&[(0, 1), (0, 2)]]);
        let hat = mle_pi_hat(&g, &z);
        assert_eq!((hat.get(0, 0, 0), hat.get(0, 0, 1), hat.get(0, 1, 1)), (1.0, 0.5, 0.0));

        let empty = graph(3, &[&[]]);
        assert!(mle_pi_hat(&empty, &z).as_slice().iter().all(|&v| v == 0.0));

        let complete = graph(4, &[&[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]]);
        let z = Assignment::new(vec![0, 1, 0, 1], 2).unwrap();
        assert!(mle_pi_hat(&complete, &z).as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn uniform_likelihood() {
        let g = graph(5, &[&[(0, 1), (2, 3)], &[(1, 4)]]);
        let z = Assignment::new(vec![0, 1, 0, 1, 1], 2).unwrap();
        let pi = LayerBlocks::filled(2, 2, 0.5);
        let expected = -(10.0 * 2.0) * core::f64::consts::LN_2;
        assert!((log_likelihood_mlsbm(&g, &z, &pi) - expected).abs() < 1e-12);

        let g = graph(2, &[&[(0, 1)]]);
        let z = Assignment::constant(2, 1).unwrap();
        let pi = LayerBlocks::filled(1, 1, 0.3);
        assert!((log_likelihood_mlsbm(&g, &z, &pi) - ln(0.3)).abs() < 1e-15);
    }

    #[test]
    fn profile_likelihood_of_deterministic_blocks_is_zero() {
        let empty = graph(4, &[&[]]);
        let z = Assignment::new(vec![0, 1, 0, 1], 2).unwrap();
        assert_eq!(profile_log_likelihood(&empty, &z), 0.0);

        let cliques = graph(6, &[&[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]]);
        let z = Assignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        assert_eq!(profile_log_likelihood(&cliques, &z), 0.0);
    }

    #[test]
    fn expected_likelihood_closed_form_for_block_constant_p() {
        let z = Assignment::new(vec![0, 0, 1, 1, 1], 2).unwrap();
        let pi = LayerBlocks::from_nested(&[vec![vec![0.3, 0.1], vec![0.1, 0.6]]]).unwrap();
        let p = PairProbabilities::block_constant(&z, &pi);
        let counts = block_counts(&z);
        let mut closed = 0.0;
        for q in 0..2 {
            for l in q..2 {
                let v = pi.get(0, q, l);
                closed += counts.pair_count(q, l) as f64 * (v * ln(v) + (1.0 - v) * ln(1.0 - v));
            }
        }
        assert!((expected_log_likelihood(&p, &z, &pi) - closed).abs() < 1e-12);
        assert!(pi_bar(&p, &z).max_abs_diff(&pi) < 1e-15);
    }

    #[test]
    fn expected_likelihood_of_zero_p() {
        let z = Assignment::new(vec![0, 1, 1], 2).unwrap();
        let pi = LayerBlocks::from_nested(&[vec![vec![0.3, 0.2], vec![0.2, 0.4]]]).unwrap();
        let p = PairProbabilities::new(vec![Mat::zeros(3, 3)]).unwrap();
        let expected = 2.0 * ln(0.8) + ln(0.6);
        assert!((expected_log_likelihood(&p, &z, &pi) - expected).abs() < 1e-12);
    }

    #[test]
    fn decomposition_with_empty_graph() {
        let z = Assignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let pi = LayerBlocks::from_nested(&[vec![vec![0.4, 0.2], vec![0.2, 0.5]]]).unwrap();
        let p = PairProbabilities::block_constant(&z, &pi);
        let g = MultiLayerGraph::single(Layer::empty(4));
        assert!(decomposition_residual(&g, &p, &z) < 1e-12);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_transform(0.0, 0.0), 0.5);
        assert_eq!(phi_transform(1.0, -1.0), 0.5);
        assert!((phi_transform(ln(3.0), 0.0) - 0.75).abs() < 1e-15);
        assert!(phi_transform(800.0, 0.0) == 1.0 && phi_transform(-800.0, 0.0) >= 0.0);
    }

    #[test]
    fn recentering_keeps_probabilities() {
        let pi = Mat::from_rows(&[vec![0.3, -1.0], vec![-1.0, 2.0]]);
        let mut p = RmlsbmParams::new(pi, vec![0.5, 1.5, -0.2]).unwrap();
        let before = p.to_probabilities();
        p.recenter();
        assert!(p.beta().iter().sum::<f64>().abs() < 1e-15);
        assert!(p.to_probabilities().max_abs_diff(&before) < 1e-15);
        assert_eq!(p.free_parameter_count(), 3 + 3 - 1);
    }

    #[test]
    fn vector_round_trip() {
        let pi = Mat::from_rows(&[vec![0.3, -1.0], vec![-1.0, 2.0]]);
        let p = RmlsbmParams::new(pi, vec![0.5, -0.5]).unwrap();
        let v = p.to_vector();
        assert_eq!(v, vec![0.3, -1.0, 2.0, 0.5, -0.5]);
        assert_eq!(RmlsbmParams::from_vector(2, 2, &v), p);
    }

    #[test]
    fn rejects_asymmetric_or_invalid_parameters() {
        let pi = Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(RmlsbmParams::new(pi, vec![0.0]).is_err());
        let blocks = LayerBlocks::filled(1, 2, 1.5);
        assert_eq!(
            MlsbmParams::with_uniform_alpha(blocks),
            Err(Error::InvalidProbability(1.5))
        );
    }
}
