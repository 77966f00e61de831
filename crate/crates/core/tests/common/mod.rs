//! Fixtures and brute-force reference implementations shared by the
//! integration tests. Everything here works on dense matrices with plain
//! loops so it shares no code paths with the library.
#![allow(dead_code, clippy::needless_range_loop)]

use mlsbm_core::blockmodel::{LayerBlocks, PairProbabilities, RmlsbmParams};
use mlsbm_core::rng::{rng_from_seed, SimRng};
use mlsbm_core::{Assignment, Mat, MultiLayerGraph};
use rand::Rng;

pub fn dense(g: &MultiLayerGraph) -> Vec<Vec<Vec<f64>>> {
    g.layers()
        .iter()
        .map(|l| {
            l.to_dense()
                .into_iter()
                .map(|row| row.into_iter().map(f64::from).collect())
                .collect()
        })
        .collect()
}

/// Labels with every class used at least once (requires `k <= n`).
pub fn random_labels(rng: &mut SimRng, n: usize, k: usize) -> Assignment {
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    Assignment::new(labels, k).unwrap()
}

pub fn random_tau(rng: &mut SimRng, n: usize, k: usize) -> Mat {
    let mut tau = Mat::zeros(n, k);
    for i in 0..n {
        let row: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = row.iter().sum();
        for q in 0..k {
            tau[(i, q)] = row[q] / s;
        }
    }
    tau
}

pub fn random_alpha(rng: &mut SimRng, k: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_blocks(rng: &mut SimRng, m: usize, k: usize, lo: f64, hi: f64) -> LayerBlocks {
    let mut pi = LayerBlocks::zeros(m, k);
    for layer in 0..m {
        for q in 0..k {
            for l in q..k {
                pi.set(layer, q, l, rng.gen_range(lo..hi));
            }
        }
    }
    pi
}

pub fn random_restricted(rng: &mut SimRng, m: usize, k: usize) -> RmlsbmParams {
    let mut pi = Mat::zeros(k, k);
    for q in 0..k {
        for l in q..k {
            pi[(q, l)] = rng.gen_range(-2.0..1.0);
            pi[(l, q)] = pi[(q, l)];
        }
    }
    let mut beta: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = beta.iter().sum::<f64>() / m as f64;
    beta.iter_mut().for_each(|b| *b -= mean);
    RmlsbmParams::new(pi, beta).unwrap()
}

/// Pairwise probabilities that are not block constant, strictly inside (0, 1).
pub fn random_pair_probabilities(rng: &mut SimRng, n: usize, m: usize) -> PairProbabilities {
    let layers = (0..m)
        .map(|_| {
            let mut p = Mat::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    p[(i, j)] = rng.gen_range(0.1..0.9);
                    p[(j, i)] = p[(i, j)];
                }
            }
            p
        })
        .collect();
    PairProbabilities::new(layers).unwrap()
}

pub fn sample_graph(rng: &mut SimRng, p: &PairProbabilities) -> MultiLayerGraph {
    let n = p.n_nodes();
    let lists: Vec<Vec<(usize, usize)>> = (0..p.n_layers())
        .map(|m| {
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < p.get(m, i, j) {
                        e.push((i, j));
                    }
                }
            }
            e
        })
        .collect();
    MultiLayerGraph::from_edge_lists(n, &lists).unwrap().0
}

pub fn random_graph(rng: &mut SimRng, n: usize, m: usize, density: f64) -> MultiLayerGraph {
    let lists: Vec<Vec<(usize, usize)>> = (0..m)
        .map(|_| {
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < density {
                        e.push((i, j));
                    }
                }
            }
            e
        })
        .collect();
    MultiLayerGraph::from_edge_lists(n, &lists).unwrap().0
}

pub fn rng(seed: u64) -> SimRng {
    rng_from_seed(seed)
}

fn bern_log(a: f64, p: f64) -> f64 {
    // Same floor as the library; only differs from ln at p = 0.
    a * p.max(1e-12).ln() + (1.0 - a) * (1.0 - p).max(1e-12).ln()
}

/// `sum tau log alpha + 1/2 sum_{i != j} sum_{q,l,m} tau tau [A log pi + (1-A) log(1-pi)] - sum tau log tau`.
pub fn naive_elbo(
    g: &MultiLayerGraph,
    tau: &Mat,
    alpha: &[f64],
    log_mass: impl Fn(usize, usize, usize, f64) -> f64,
) -> f64 {
    let a = dense(g);
    let (n, k) = (tau.rows(), tau.cols());
    let mut total = 0.0;
    for i in 0..n {
        for q in 0..k {
            let t = tau[(i, q)];
            if t > 0.0 {
                total += t * alpha[q].ln() - t * t.ln();
            }
        }
    }
    let mut pairs = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for q in 0..k {
                for l in 0..k {
                    for (m, layer) in a.iter().enumerate() {
                        pairs += tau[(i, q)] * tau[(j, l)] * log_mass(m, q, l, layer[i][j]);
                    }
                }
            }
        }
    }
    total + 0.5 * pairs
}

pub fn naive_elbo_mlsbm(g: &MultiLayerGraph, tau: &Mat, alpha: &[f64], pi: &LayerBlocks) -> f64 {
    naive_elbo(g, tau, alpha, |m, q, l, a| bern_log(a, pi.get(m, q, l)))
}

pub fn naive_elbo_rmlsbm(g: &MultiLayerGraph, tau: &Mat, alpha: &[f64], params: &RmlsbmParams) -> f64 {
    naive_elbo(g, tau, alpha, |m, q, l, a| {
        let theta = params.pi()[(q, l)] + params.beta()[m];
        a * theta - (1.0 + theta.exp()).ln()
    })
}

/// One in-place sweep over the nodes in order, each row set to the softmax of
/// its expected log mass computed by direct summation.
pub fn naive_sweep(
    g: &MultiLayerGraph,
    tau: &Mat,
    alpha: &[f64],
    log_mass: impl Fn(usize, usize, usize, f64) -> f64,
) -> Mat {
    let a = dense(g);
    let (n, k) = (tau.rows(), tau.cols());
    let mut out = tau.clone();
    for i in 0..n {
        let mut s: Vec<f64> = alpha.iter().map(|x| x.ln()).collect();
        for q in 0..k {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for l in 0..k {
                    for (m, layer) in a.iter().enumerate() {
                        s[q] += out[(j, l)] * log_mass(m, q, l, layer[i][j]);
                    }
                }
            }
        }
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
        let tot: f64 = e.iter().sum();
        for q in 0..k {
            out[(i, q)] = e[q] / tot;
        }
    }
    out
}

pub fn mlsbm_log_mass(pi: &LayerBlocks) -> impl Fn(usize, usize, usize, f64) -> f64 + '_ {
    move |m, q, l, a| bern_log(a, pi.get(m, q, l))
}

/// `pi[m][q][l] = sum_{i<j} tau_iq tau_jl A + tau_il tau_jq A (q != l) / same without A`.
pub fn naive_m_step_pi(g: &MultiLayerGraph, tau: &Mat) -> Vec<Vec<Vec<f64>>> {
    let a = dense(g);
    let (n, k) = (tau.rows(), tau.cols());
    let mut out = vec![vec![vec![0.0; k]; k]; a.len()];
    for (m, layer) in a.iter().enumerate() {
        for q in 0..k {
            for l in 0..k {
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let w = tau[(i, q)] * tau[(j, l)];
                        num += w * layer[i][j];
                        den += w;
                    }
                }
                out[m][q][l] = num / den;
            }
        }
    }
    out
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Largest number of agreements over all relabelings of `z` (both over `k` labels).
pub fn brute_max_agreement(z_ref: &[usize], z: &[usize], k: usize) -> usize {
    permutations(k)
        .iter()
        .map(|perm| z_ref.iter().zip(z).filter(|(a, b)| **a == perm[**b]).count())
        .max()
        .unwrap()
}

/// `sum_m [c_m * within-block edges - k_m * within-block pairs]` by double loop.
pub fn naive_oracle_t(g: &MultiLayerGraph, z: &[usize], a: &[f64], b: &[f64]) -> f64 {
    let adj = dense(g);
    let n = z.len() as f64;
    let mut total = 0.0;
    for (m, layer) in adj.iter().enumerate() {
        let c = (a[m] * (1.0 - b[m] / n) / (b[m] * (1.0 - a[m] / n))).ln();
        let kk = ((1.0 - b[m] / n) / (1.0 - a[m] / n)).ln();
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                if z[i] == z[j] {
                    total += c * layer[i][j] - kk;
                }
            }
        }
    }
    total
}
