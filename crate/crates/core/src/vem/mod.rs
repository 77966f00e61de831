//! Variational EM for the multi-layer blockmodels.
//!
//! The posterior over labels is approximated by independent multinomials
//! `tau[i]`. Both fitters alternate
//!
//! * an E-step: sweeps over the nodes, replacing each row `tau[i]` by the
//!   softmax of its expected complete-data log-likelihood (computed in log
//!   space with the row maximum subtracted), until no entry moves by more
//!   than `inner.tol` or `inner.max_sweeps` sweeps have run;
//! * an M-step: closed form for MLSBM, L-BFGS for RMLSBM.
//!
//! Rows are updated in place, one node at a time, so each update is an exact
//! coordinate ascent step and the objective never decreases.

pub mod mlsbm;
pub mod rmlsbm;

use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::Assignment;
use crate::blockmodel::RestrictedOptions;
use crate::error::{Error, Result};
use crate::graph::MultiLayerGraph;
use crate::math::{ln, softmax_in_place, xlogx};
use crate::matrix::Mat;

pub use mlsbm::{e_step_mlsbm, elbo_mlsbm, fit_mlsbm, m_step_mlsbm, FitResult};
pub use rmlsbm::{
    e_step_rmlsbm, elbo_rmlsbm, fit_rmlsbm, m_step_gradients, m_step_rmlsbm, RmlsbmFitResult,
    RmlsbmMStep,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub max_sweeps: usize,
    /// Stop once a full sweep changes no entry by more than this.
    pub tol: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            max_sweeps: 50,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VemOptions {
    pub max_outer: usize,
    /// Stop once `|J_t - J_{t-1}| <= rel_tol |J_{t-1}|`.
    pub rel_tol: f64,
    pub inner: InnerOptions,
    pub restricted: RestrictedOptions,
}

impl Default for VemOptions {
    fn default() -> Self {
        VemOptions {
            max_outer: 200,
            rel_tol: 1e-6,
            inner: InnerOptions::default(),
            restricted: RestrictedOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub tau: Mat,
    /// Objective after every M-step, starting with the one fitted to the
    /// initial responsibilities.
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl VariationalState {
    pub fn final_elbo(&self) -> f64 {
        self.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Log-mass of an edge (`on`) and a non-edge (`off`) for each layer and
/// ordered block pair, laid out as `[m][q][l]`.
#[derive(Debug, Clone)]
pub(crate) struct PairLogMass {
    pub k: usize,
    pub n_layers: usize,
    pub on: Vec<f64>,
    pub off: Vec<f64>,
}

impl PairLogMass {
    pub fn from_fn<F>(k: usize, n_layers: usize, f: F) -> Self
    where
        F: Fn(usize, usize, usize) -> (f64, f64),
    {
        let mut on = vec![0.0; n_layers * k * k];
        let mut off = vec![0.0; n_layers * k * k];
        for m in 0..n_layers {
            for q in 0..k {
                for l in 0..k {
                    let (a, b) = f(m, q, l);
                    on[(m * k + q) * k + l] = a;
                    off[(m * k + q) * k + l] = b;
                }
            }
        }
        PairLogMass { k, n_layers, on, off }
    }
}

/// Checks shape and normalizes rows. Rows must be nonnegative and not all zero.
pub(crate) fn normalized_tau(tau: &Mat, n: usize, k: usize) -> Result<Mat> {
    if k == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    if k > n {
        return Err(Error::TooManyClasses { k, n });
    }
    if tau.rows() != n || tau.cols() != k {
        return Err(Error::invalid(alloc::format!(
            "responsibilities are {}x{}, expected {n}x{k}",
            tau.rows(),
            tau.cols()
        )));
    }
    let mut out = tau.clone();
    for i in 0..n {
        let row = out.row_mut(i);
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::DegenerateResponsibilities(i));
        }
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateResponsibilities(i));
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
    Ok(out)
}

pub(crate) fn log_alpha(alpha: &[f64]) -> Vec<f64> {
    alpha
        .iter()
        .map(|&a| if a > 0.0 { ln(a) } else { f64::NEG_INFINITY })
        .collect()
}

/// `sum_i sum_q tau log alpha - sum tau log tau`.
pub(crate) fn prior_and_entropy(tau: &Mat, alpha: &[f64]) -> f64 {
    let logs = log_alpha(alpha);
    let mut total = 0.0;
    for i in 0..tau.rows() {
        for (q, &t) in tau.row(i).iter().enumerate() {
            if t > 0.0 {
                total += t * logs[q] - xlogx(t);
            }
        }
    }
    total
}

/// Class weights `alpha_q = mean_i tau[i][q]`.
pub(crate) fn class_weights(tau: &Mat) -> Vec<f64> {
    let n = tau.rows() as f64;
    tau.column_sums().into_iter().map(|s| s / n).collect()
}

struct Sweeper<'a> {
    g: &'a MultiLayerGraph,
    log_alpha: &'a [f64],
    mass: &'a PairLogMass,
    /// `diff[m][q][l] = on - off`.
    diff: Vec<f64>,
    /// `sum_m off[m][q][l]`.
    off_total: Vec<f64>,
    col_totals: Vec<f64>,
    scores: Vec<f64>,
    nbr: Vec<f64>,
}

impl<'a> Sweeper<'a> {
    fn new(g: &'a MultiLayerGraph, tau: &Mat, log_alpha: &'a [f64], mass: &'a PairLogMass) -> Self {
        let k = mass.k;
        let diff = mass.on.iter().zip(&mass.off).map(|(a, b)| a - b).collect();
        let mut off_total = vec![0.0; k * k];
        for m in 0..mass.n_layers {
            for (t, v) in off_total.iter_mut().zip(&mass.off[m * k * k..(m + 1) * k * k]) {
                *t += v;
            }
        }
        Sweeper {
            g,
            log_alpha,
            mass,
            diff,
            off_total,
            col_totals: tau.column_sums(),
            scores: vec![0.0; k],
            nbr: vec![0.0; k],
        }
    }

    /// Replaces row `i` by its coordinate-ascent optimum and returns the
    /// largest entry change.
    fn update_row(&mut self, tau: &mut Mat, i: usize) -> f64 {
        let k = self.mass.k;
        let row_i = tau.row(i);
        for q in 0..k {
            let mut s = self.log_alpha[q];
            let offs = &self.off_total[q * k..(q + 1) * k];
            for l in 0..k {
                s += (self.col_totals[l] - row_i[l]) * offs[l];
            }
            self.scores[q] = s;
        }
        for (m, layer) in self.g.layers().iter().enumerate() {
            let nbrs = layer.neighbors(i);
            if nbrs.is_empty() {
                continue;
            }
            self.nbr.iter_mut().for_each(|v| *v = 0.0);
            for &j in nbrs {
                for (acc, v) in self.nbr.iter_mut().zip(tau.row(j)) {
                    *acc += v;
                }
            }
            let block = &self.diff[m * k * k..(m + 1) * k * k];
            for q in 0..k {
                let d = &block[q * k..(q + 1) * k];
                self.scores[q] += self.nbr.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        softmax_in_place(&mut self.scores);
        let row = tau.row_mut(i);
        let mut change: f64 = 0.0;
        for q in 0..k {
            let delta = self.scores[q] - row[q];
            change = change.max(delta.abs());
            self.col_totals[q] += delta;
            row[q] = self.scores[q];
        }
        change
    }
}

/// Runs fixed-point sweeps in place; returns the number of sweeps.
pub(crate) fn fixed_point(
    g: &MultiLayerGraph,
    tau: &mut Mat,
    log_alpha: &[f64],
    mass: &PairLogMass,
    inner: &InnerOptions,
) -> usize {
    let mut sweeper = Sweeper::new(g, tau, log_alpha, mass);
    let mut sweeps = 0;
    while sweeps < inner.max_sweeps {
        let mut change: f64 = 0.0;
        for i in 0..g.n_nodes() {
            change = change.max(sweeper.update_row(tau, i));
        }
        sweeps += 1;
        if change < inner.tol {
            break;
        }
    }
    sweeps
}

pub(crate) fn hard_labels(tau: &Mat) -> Assignment {
    Assignment::from_responsibilities(tau)
}
