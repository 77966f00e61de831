//! Penalized likelihood rule for the two-parameter model with known
//! `(a, b)`: maximize
//! `T(z) = sum_m [c_m * #within-block edges - k_m * #within-block pairs]`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::graph::MultiLayerGraph;
use crate::math::ln;
use crate::rng::{derive_seed, rng_from_seed};

/// Largest search space the exhaustive mode will enumerate.
pub const EXHAUSTIVE_BUDGET: f64 = 1e6;
/// Random restarts of the local search.
pub const LOCAL_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleWeights {
    /// Edge reward `ln[a (1 - b/N) / (b (1 - a/N))]` per layer.
    pub c: Vec<f64>,
    /// Pair penalty `ln[(1 - b/N) / (1 - a/N)]` per layer.
    pub k: Vec<f64>,
}

impl OracleWeights {
    /// Requires `0 < b < a < n` in every layer.
    pub fn new(a: &[f64], b: &[f64], n: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        let mut c = Vec::with_capacity(a.len());
        let mut k = Vec::with_capacity(a.len());
        for (&am, &bm) in a.iter().zip(b) {
            if !(0.0 < bm && bm < am && am < n) {
                return Err(Error::invalid(alloc::format!(
                    "oracle weights need 0 < b < a < N, got a = {am}, b = {bm}, N = {n}"
                )));
            }
            c.push(ln(am * (1.0 - bm / n) / (bm * (1.0 - am / n))));
            k.push(ln((1.0 - bm / n) / (1.0 - am / n)));
        }
        Ok(OracleWeights { c, k })
    }

    fn penalty(&self) -> f64 {
        self.k.iter().sum()
    }
}

pub fn oracle_t(g: &MultiLayerGraph, z: &Assignment, a: &[f64], b: &[f64]) -> Result<f64> {
    let w = OracleWeights::new(a, b, g.n_nodes() as f64)?;
    check_layers(g, &w)?;
    Ok(t_value(g, z, &w))
}

fn check_layers(g: &MultiLayerGraph, w: &OracleWeights) -> Result<()> {
    if w.c.len() != g.n_layers() {
        return Err(Error::LengthMismatch {
            expected: g.n_layers(),
            found: w.c.len(),
        });
    }
    Ok(())
}

pub(crate) fn t_value(g: &MultiLayerGraph, z: &Assignment, w: &OracleWeights) -> f64 {
    let mut total = 0.0;
    for (m, layer) in g.layers().iter().enumerate() {
        let within = layer.edges().iter().filter(|&&(i, j)| z.label(i) == z.label(j)).count();
        total += w.c[m] * within as f64;
    }
    let pairs: usize = z.class_sizes().iter().map(|&s| s * s.saturating_sub(1) / 2).sum();
    total - w.penalty() * pairs as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Exhaustive,
    Local,
}

/// Maximizes `T` over assignments with at most `k` classes.
///
/// Exhaustive mode enumerates canonical labelings (restricted growth
/// strings) in lexicographic order and keeps the first maximizer; it refuses
/// search spaces larger than `k^N / k! > 1e6`. Local mode runs greedy best
/// single-node moves from [`LOCAL_RESTARTS`] random starts and keeps the
/// best result (earliest restart on ties).
pub fn oracle_maximize_t(
    g: &MultiLayerGraph,
    a: &[f64],
    b: &[f64],
    k: usize,
    mode: OracleMode,
    seed: u64,
) -> Result<Assignment> {
    let n = g.n_nodes();
    if k == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    if k > n {
        return Err(Error::TooManyClasses { k, n });
    }
    let w = OracleWeights::new(a, b, n as f64)?;
    check_layers(g, &w)?;
    match mode {
        OracleMode::Exhaustive => exhaustive(g, &w, k),
        OracleMode::Local => Ok(local(g, &w, k, seed)),
    }
}

fn search_space(n: usize, k: usize) -> f64 {
    let log_size = n as f64 * ln(k as f64) - (1..=k).map(|v| ln(v as f64)).sum::<f64>();
    crate::math::exp(log_size)
}

struct Exhaustive<'a> {
    g: &'a MultiLayerGraph,
    w: &'a OracleWeights,
    k: usize,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Exhaustive<'_> {
    /// Gain from giving node `i` label `q`, counting only nodes `< i`.
    fn gain(&self, i: usize, q: usize) -> f64 {
        let mut value = -self.w.penalty() * self.sizes[q] as f64;
        for (m, layer) in self.g.layers().iter().enumerate() {
            let count = layer
                .neighbors(i)
                .iter()
                .take_while(|&&j| j < i)
                .filter(|&&j| self.labels[j] == q)
                .count();
            value += self.w.c[m] * count as f64;
        }
        value
    }

    fn descend(&mut self, i: usize, used: usize, value: f64) {
        if i == self.labels.len() {
            if self.best.as_ref().map_or(true, |(v, _)| value > *v) {
                self.best = Some((value, self.labels.clone()));
            }
            return;
        }
        let limit = (used + 1).min(self.k);
        for q in 0..limit {
            let next = value + self.gain(i, q);
            self.labels[i] = q;
            self.sizes[q] += 1;
            self.descend(i + 1, used.max(q + 1), next);
            self.sizes[q] -= 1;
        }
    }
}

fn exhaustive(g: &MultiLayerGraph, w: &OracleWeights, k: usize) -> Result<Assignment> {
    let n = g.n_nodes();
    let space = search_space(n, k);
    if space > EXHAUSTIVE_BUDGET {
        return Err(Error::SearchBudgetExceeded(space as u128));
    }
    let mut search = Exhaustive {
        g,
        w,
        k,
        labels: vec![0; n],
        sizes: vec![0; k],
        best: None,
    };
    search.descend(0, 0, 0.0);
    let labels = search.best.map(|(_, l)| l).unwrap_or_default();
    Assignment::new(labels, k)
}

fn local(g: &MultiLayerGraph, w: &OracleWeights, k: usize, seed: u64) -> Assignment {
    let n = g.n_nodes();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..LOCAL_RESTARTS {
        let mut rng = rng_from_seed(derive_seed(seed, &[restart as u64]));
        let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        climb(g, w, k, &mut labels);
        let z = Assignment::new(labels, k).expect("labels drawn below k");
        let value = t_value(g, &z, w);
        if best.as_ref().map_or(true, |(v, _)| value > *v) {
            best = Some((value, z.labels().to_vec()));
        }
    }
    Assignment::new(best.map(|(_, l)| l).unwrap_or_default(), k).expect("labels below k")
}

/// Applies the best improving single-node move until none remains.
fn climb(g: &MultiLayerGraph, w: &OracleWeights, k: usize, labels: &mut [usize]) {
    let n = labels.len();
    let penalty = w.penalty();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut score = vec![0.0; k];
    let tol = 1e-12 * (1.0 + penalty.abs() + w.c.iter().map(|c| c.abs()).sum::<f64>());
    loop {
        let mut best_move: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            let own = labels[i];
            for (q, s) in score.iter_mut().enumerate() {
                let others = sizes[q] - usize::from(q == own);
                *s = -penalty * others as f64;
            }
            for (m, layer) in g.layers().iter().enumerate() {
                for &j in layer.neighbors(i) {
                    score[labels[j]] += w.c[m];
                }
            }
            for q in 0..k {
                let delta = score[q] - score[own];
                if delta > tol && best_move.map_or(true, |(d, _, _)| delta > d) {
                    best_move = Some((delta, i, q));
                }
            }
        }
        match best_move {
            Some((_, i, q)) => {
                sizes[labels[i]] -= 1;
                sizes[q] += 1;
                labels[i] = q;
            }
            None => break,
        }
    }
}
