//! Planted-partition experiments, one replicate at a time.
//!
//! A grid point fixes `(N, K, M)`; each replicate draws a planted instance,
//! builds the spectral initialization and runs the requested methods. The
//! replicate seed is `derive_seed(spec.seed, [grid index, replicate])`; the
//! instance is drawn from that seed and every other random step derives its
//! own seed from it, so replicates are independent of scheduling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::assignment::Assignment;
use crate::baselines::{aggregate_sparse, fit_single_layer_sbm, majority_vote};
use crate::error::{Error, Result};
use crate::generate::{generate_planted, PlantedInstance, Scenario};
use crate::graph::MultiLayerGraph;
use crate::matrix::Mat;
use crate::metrics::{ccr, misclustering_rate, nmi};
use crate::oracle::{oracle_maximize_t, OracleMode};
use crate::rng::derive_seed;
use crate::spectral::{spectral_init_with, InitLayer, SpectralInit, SpectralOptions};
use crate::vem::{fit_mlsbm, fit_rmlsbm, VemOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sweep {
    VaryN,
    VaryK,
    VaryM,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::VaryN => "vary_n",
            Sweep::VaryK => "vary_k",
            Sweep::VaryM => "vary_m",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vary_n" => Some(Sweep::VaryN),
            "vary_k" => Some(Sweep::VaryK),
            "vary_m" => Some(Sweep::VaryM),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mlsbm,
    Rmlsbm,
    /// Single-layer fit of the union of all layers.
    AggSbm,
    /// Majority vote over per-layer fits.
    Majority,
    /// One single-layer fit per layer.
    SingleLayers,
    /// Penalized likelihood with the true `(a, b)`, local search.
    Oracle,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mlsbm,
        Method::Rmlsbm,
        Method::AggSbm,
        Method::Majority,
        Method::SingleLayers,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mlsbm => "mlsbm",
            Method::Rmlsbm => "rmlsbm",
            Method::AggSbm => "agg_sbm",
            Method::Majority => "majority",
            Method::SingleLayers => "single_layers",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.iter().copied().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub sweep: Sweep,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// Values taken by the swept quantity.
    pub grid: Vec<usize>,
    pub scenario: Scenario,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub init_layer: InitLayer,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("experiment grid is empty"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods requested"));
        }
        for &value in &self.grid {
            let (n, k, m) = self.point(value);
            if k == 0 || m == 0 {
                return Err(Error::invalid("K and M must be positive"));
            }
            if k > n {
                return Err(Error::TooManyClasses { k, n });
            }
            if let InitLayer::Index(idx) = self.init_layer {
                if idx >= m {
                    return Err(Error::invalid(format!("init layer {idx} out of range for M = {m}")));
                }
            }
        }
        Ok(())
    }

    /// `(N, K, M)` at a grid value.
    pub fn point(&self, value: usize) -> (usize, usize, usize) {
        match self.sweep {
            Sweep::VaryN => (value, self.k, self.m),
            Sweep::VaryK => (self.n, value, self.m),
            Sweep::VaryM => (self.n, self.k, value),
        }
    }

    pub fn replicate_seed(&self, grid_index: usize, replicate: usize) -> u64 {
        derive_seed(self.seed, &[grid_index as u64, replicate as u64])
    }
}

/// Agreement of an estimate with the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub nmi: f64,
    pub ccr: f64,
    pub misclustering_rate: f64,
}

pub fn score(truth: &Assignment, z_hat: &Assignment) -> Result<Scores> {
    Ok(Scores {
        nmi: nmi(truth, z_hat)?,
        ccr: ccr(truth, z_hat)?,
        misclustering_rate: misclustering_rate(truth, z_hat, truth.k().max(z_hat.k()))?,
    })
}

/// A method's labels; `single_layers` yields one outcome per layer, named
/// `single_layer_<m>` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: String,
    pub z_hat: Assignment,
    /// Final objective of variational fits.
    pub elbo: Option<f64>,
}

/// Shared inputs of one replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub instance: PlantedInstance,
    pub init_tau: Mat,
    pub init_layer: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub vem: VemOptions,
    pub spectral: SpectralOptions,
}

fn init_seed(seed: u64, layer: usize) -> u64 {
    derive_seed(seed, &[0x696e_6974, layer as u64])
}

/// Spectral initialization shared by the multi-layer methods of one run.
pub fn initialize(
    g: &MultiLayerGraph,
    k: usize,
    init_layer: InitLayer,
    seed: u64,
    opts: &RunOptions,
) -> Result<SpectralInit> {
    spectral_init_with(g, init_layer, k, init_seed(seed, usize::MAX), &opts.spectral)
}

pub fn prepare_replicate(
    n: usize,
    k: usize,
    m: usize,
    scenario: Scenario,
    init_layer: InitLayer,
    seed: u64,
    opts: &RunOptions,
) -> Result<Replicate> {
    let instance = generate_planted(n, k, m, scenario, seed)?;
    let init = initialize(&instance.graph, k, init_layer, seed, opts)?;
    Ok(Replicate {
        instance,
        init_tau: init.tau,
        init_layer: init.layer_index,
        seed,
    })
}

fn single_layer_fits(
    g: &MultiLayerGraph,
    k: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<(Assignment, f64)>> {
    (0..g.n_layers())
        .map(|m| {
            let single = g.select_layers(&[m])?;
            let tau = spectral_init_with(&single, InitLayer::Index(0), k, init_seed(seed, m), &opts.spectral)?.tau;
            let fit = fit_single_layer_sbm(g.layer(m), k, &tau, &opts.vem)?;
            Ok((fit.z_hat, fit.state.final_elbo()))
        })
        .collect()
}

/// Runs one method on one graph. `layer_rates` (the planted `(eps, lambda)`
/// per layer) is required only by the oracle.
pub fn run_method(
    g: &MultiLayerGraph,
    k: usize,
    method: Method,
    init_tau: &Mat,
    layer_rates: Option<&[(f64, f64)]>,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<MethodOutcome>> {
    let one = |z_hat: Assignment, elbo: Option<f64>| {
        alloc::vec![MethodOutcome {
            method: String::from(method.name()),
            z_hat,
            elbo,
        }]
    };
    Ok(match method {
        Method::Mlsbm => {
            let fit = fit_mlsbm(g, k, init_tau, &opts.vem)?;
            let elbo = fit.state.final_elbo();
            one(fit.z_hat, Some(elbo))
        }
        Method::Rmlsbm => {
            let fit = fit_rmlsbm(g, k, init_tau, &opts.vem)?;
            let elbo = fit.state.final_elbo();
            one(fit.z_hat, Some(elbo))
        }
        Method::AggSbm => {
            let agg = MultiLayerGraph::single(aggregate_sparse(g));
            let tau = spectral_init_with(&agg, InitLayer::Index(0), k, init_seed(seed, 0xa66), &opts.spectral)?.tau;
            let fit = fit_single_layer_sbm(agg.layer(0), k, &tau, &opts.vem)?;
            let elbo = fit.state.final_elbo();
            one(fit.z_hat, Some(elbo))
        }
        Method::Majority => {
            let fits = single_layer_fits(g, k, seed, opts)?;
            let labels: Vec<Assignment> = fits.into_iter().map(|(z, _)| z).collect();
            one(majority_vote(&labels, k)?, None)
        }
        Method::SingleLayers => single_layer_fits(g, k, seed, opts)?
            .into_iter()
            .enumerate()
            .map(|(m, (z_hat, elbo))| MethodOutcome {
                method: format!("single_layer_{m}"),
                z_hat,
                elbo: Some(elbo),
            })
            .collect(),
        Method::Oracle => {
            let rates = layer_rates.ok_or_else(|| Error::invalid("oracle needs the planted rates"))?;
            let n = g.n_nodes() as f64;
            let a: Vec<f64> = rates.iter().map(|&(_, lambda)| lambda * n).collect();
            let b: Vec<f64> = rates.iter().map(|&(eps, _)| eps * n).collect();
            one(oracle_maximize_t(g, &a, &b, k, OracleMode::Local, derive_seed(seed, &[0x6f72]))?, None)
        }
    })
}

/// Every requested method on one replicate, in request order.
pub fn run_replicate(rep: &Replicate, methods: &[Method], opts: &RunOptions) -> Result<Vec<(MethodOutcome, Scores)>> {
    let k = rep.instance.truth.k();
    let mut out = Vec::new();
    for &method in methods {
        for outcome in run_method(
            &rep.instance.graph,
            k,
            method,
            &rep.init_tau,
            Some(&rep.instance.layer_rates),
            rep.seed,
            opts,
        )? {
            let s = score(&rep.instance.truth, &outcome.z_hat)?;
            out.push((outcome, s));
        }
    }
    Ok(out)
}
