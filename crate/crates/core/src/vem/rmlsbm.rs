//! Variational EM for the restricted blockmodel `logit P = pi + beta_m`.

use alloc::vec::Vec;

use super::{
    class_weights, fixed_point, hard_labels, log_alpha, normalized_tau, prior_and_entropy,
    InnerOptions, PairLogMass, VariationalState, VemOptions,
};
use crate::assignment::Assignment;
use crate::blockmodel::{
    box_bound, fit_restricted, BlockTotals, RestrictedGradient, RestrictedOptions, RmlsbmParams,
};
use crate::error::Result;
use crate::graph::MultiLayerGraph;
use crate::math::softplus;
use crate::matrix::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct RmlsbmFitResult {
    pub params: RmlsbmParams,
    pub alpha: Vec<f64>,
    pub state: VariationalState,
    pub z_hat: Assignment,
}

/// Output of one restricted M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct RmlsbmMStep {
    pub alpha: Vec<f64>,
    pub params: RmlsbmParams,
    pub iterations: usize,
    /// False when the optimizer hit its budget; `params` is still the best
    /// point seen (never worse than the warm start).
    pub converged: bool,
}

pub fn elbo_rmlsbm(g: &MultiLayerGraph, tau: &Mat, alpha: &[f64], params: &RmlsbmParams) -> f64 {
    prior_and_entropy(tau, alpha)
        + BlockTotals::from_responsibilities(g, tau).restricted_log_likelihood(params)
}

pub(crate) fn rmlsbm_mass(params: &RmlsbmParams) -> PairLogMass {
    PairLogMass::from_fn(params.k(), params.n_layers(), |m, q, l| {
        let theta = params.theta(m, q, l);
        let sp = softplus(theta);
        (theta - sp, -sp)
    })
}

pub fn e_step_rmlsbm(
    g: &MultiLayerGraph,
    tau: &Mat,
    alpha: &[f64],
    params: &RmlsbmParams,
    inner: &InnerOptions,
) -> Mat {
    let mut out = tau.clone();
    fixed_point(g, &mut out, &log_alpha(alpha), &rmlsbm_mass(params), inner);
    out
}

/// Gradient of the objective in `(pi, beta)` at fixed `tau`.
pub fn m_step_gradients(g: &MultiLayerGraph, tau: &Mat, params: &RmlsbmParams) -> RestrictedGradient {
    BlockTotals::from_responsibilities(g, tau).restricted_gradient(params)
}

/// Closed-form `alpha`, then L-BFGS on `(pi, beta)` from `warm`. The warm
/// start is kept if the optimizer fails to improve on it.
pub fn m_step_rmlsbm(
    g: &MultiLayerGraph,
    tau: &Mat,
    warm: &RmlsbmParams,
    opts: &RestrictedOptions,
) -> RmlsbmMStep {
    let totals = BlockTotals::from_responsibilities(g, tau);
    let fit = fit_restricted(&totals, warm, opts, box_bound(g.n_nodes(), g.n_layers()));
    let params = if fit.log_likelihood >= totals.restricted_log_likelihood(warm) {
        fit.params
    } else {
        warm.clone()
    };
    RmlsbmMStep {
        alpha: guarded_weights(tau),
        params,
        iterations: fit.iterations,
        converged: fit.converged,
    }
}

fn guarded_weights(tau: &Mat) -> Vec<f64> {
    let n = tau.rows() as f64;
    let mass = tau.column_sums();
    let mut alpha = class_weights(tau);
    if mass.iter().any(|&t| t < 1e-8) {
        for (a, &t) in alpha.iter_mut().zip(&mass) {
            if t < 1e-8 {
                *a = 1.0 / (10.0 * n);
            }
        }
        let total: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= total);
    }
    alpha
}

/// Alternates E- and M-steps from `init_tau`; the first M-step starts from
/// moment estimates and later ones from the previous parameters.
pub fn fit_rmlsbm(
    g: &MultiLayerGraph,
    k: usize,
    init_tau: &Mat,
    opts: &VemOptions,
) -> Result<RmlsbmFitResult> {
    let mut tau = normalized_tau(init_tau, g.n_nodes(), k)?;
    let bound = box_bound(g.n_nodes(), g.n_layers());
    let warm = RmlsbmParams::from_moments(&BlockTotals::from_responsibilities(g, &tau), bound);
    let step = m_step_rmlsbm(g, &tau, &warm, &opts.restricted);
    let (mut alpha, mut params) = (step.alpha, step.params);
    let mut elbo = elbo_rmlsbm(g, &tau, &alpha, &params);
    let mut trace = alloc::vec![elbo];
    let mut best = (tau.clone(), alpha.clone(), params.clone(), elbo);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_outer {
        iterations += 1;
        fixed_point(g, &mut tau, &log_alpha(&alpha), &rmlsbm_mass(&params), &opts.inner);
        let step = m_step_rmlsbm(g, &tau, &params, &opts.restricted);
        alpha = step.alpha;
        params = step.params;
        let next = elbo_rmlsbm(g, &tau, &alpha, &params);
        trace.push(next);
        if next > best.3 {
            best = (tau.clone(), alpha.clone(), params.clone(), next);
        }
        let done = (next - elbo).abs() <= opts.rel_tol * elbo.abs();
        elbo = next;
        if done {
            converged = true;
            break;
        }
    }

    let (tau, alpha, params, _) = best;
    Ok(RmlsbmFitResult {
        z_hat: hard_labels(&tau),
        params,
        alpha,
        state: VariationalState {
            tau,
            elbo_trace: trace,
            iterations,
            converged,
        },
    })
}
