//! Variational EM for the multi-layer blockmodel with free per-layer block
//! probabilities.

use alloc::vec::Vec;

use super::{
    class_weights, fixed_point, hard_labels, log_alpha, normalized_tau, prior_and_entropy,
    InnerOptions, PairLogMass, VariationalState, VemOptions,
};
use crate::assignment::Assignment;
use crate::blockmodel::{BlockTotals, LayerBlocks, MlsbmParams};
use crate::error::Result;
use crate::graph::MultiLayerGraph;
use crate::math::ln_prob;
use crate::matrix::Mat;

/// Responsibility mass below which a class counts as empty.
const EMPTY_CLASS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: MlsbmParams,
    pub state: VariationalState,
    pub z_hat: Assignment,
}

/// Evidence lower bound of `tau` under `(alpha, pi)`.
pub fn elbo_mlsbm(g: &MultiLayerGraph, tau: &Mat, alpha: &[f64], pi: &LayerBlocks) -> f64 {
    prior_and_entropy(tau, alpha) + BlockTotals::from_responsibilities(g, tau).log_likelihood(pi)
}

pub(crate) fn mlsbm_mass(pi: &LayerBlocks) -> PairLogMass {
    PairLogMass::from_fn(pi.k(), pi.n_layers(), |m, q, l| {
        let p = pi.get(m, q, l);
        (ln_prob(p), ln_prob(1.0 - p))
    })
}

/// Fixed-point sweeps of the responsibility update for fixed parameters.
pub fn e_step_mlsbm(
    g: &MultiLayerGraph,
    tau: &Mat,
    alpha: &[f64],
    pi: &LayerBlocks,
    inner: &InnerOptions,
) -> Mat {
    let mut out = tau.clone();
    fixed_point(g, &mut out, &log_alpha(alpha), &mlsbm_mass(pi), inner);
    out
}

/// Closed-form parameter update.
///
/// A class holding less than `1e-8` total responsibility gets the layer
/// densities as its probabilities and weight `1 / (10 N)` before `alpha`
/// is renormalized.
pub fn m_step_mlsbm(g: &MultiLayerGraph, tau: &Mat) -> MlsbmParams {
    let n = g.n_nodes();
    let k = tau.cols();
    let totals = BlockTotals::from_responsibilities(g, tau);
    let class_mass = tau.column_sums();
    let dyads = (n * n.saturating_sub(1) / 2) as f64;
    let densities: Vec<f64> = g
        .layers()
        .iter()
        .map(|layer| if dyads > 0.0 { layer.edge_count() as f64 / dyads } else { 0.0 })
        .collect();
    let empty: Vec<bool> = class_mass.iter().map(|&t| t < EMPTY_CLASS).collect();

    let mut pi = LayerBlocks::zeros(g.n_layers(), k);
    for (m, &density) in densities.iter().enumerate() {
        for q in 0..k {
            for l in q..k {
                let pairs = totals.pairs(q, l);
                let value = if empty[q] || empty[l] || pairs <= 0.0 {
                    density
                } else {
                    (totals.edges(m, q, l) / pairs).clamp(0.0, 1.0)
                };
                pi.set(m, q, l, value);
            }
        }
    }

    let mut alpha = class_weights(tau);
    if empty.iter().any(|&e| e) {
        let floor = 1.0 / (10.0 * n as f64);
        for (a, &e) in alpha.iter_mut().zip(&empty) {
            if e {
                *a = floor;
            }
        }
        let total: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= total);
    }
    MlsbmParams { alpha, pi }
}

/// Alternates E- and M-steps from `init_tau` and returns the iterate with
/// the highest objective.
pub fn fit_mlsbm(g: &MultiLayerGraph, k: usize, init_tau: &Mat, opts: &VemOptions) -> Result<FitResult> {
    let mut tau = normalized_tau(init_tau, g.n_nodes(), k)?;
    let mut params = m_step_mlsbm(g, &tau);
    let mut elbo = elbo_mlsbm(g, &tau, &params.alpha, &params.pi);
    let mut trace = alloc::vec![elbo];
    let mut best = (tau.clone(), params.clone(), elbo);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_outer {
        iterations += 1;
        fixed_point(g, &mut tau, &log_alpha(&params.alpha), &mlsbm_mass(&params.pi), &opts.inner);
        params = m_step_mlsbm(g, &tau);
        let next = elbo_mlsbm(g, &tau, &params.alpha, &params.pi);
        trace.push(next);
        if next > best.2 {
            best = (tau.clone(), params.clone(), next);
        }
        let done = (next - elbo).abs() <= opts.rel_tol * elbo.abs();
        elbo = next;
        if done {
            converged = true;
            break;
        }
    }

    let (tau, params, _) = best;
    Ok(FitResult {
        z_hat: hard_labels(&tau),
        params,
        state: VariationalState {
            tau,
            elbo_trace: trace,
            iterations,
            converged,
        },
    })
}
