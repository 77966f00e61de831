//! Experiment sweeps and real-data runs, scheduled over a rayon pool.
//!
//! Work items are independent (grid point, replicate) or (layer subset,
//! run) pairs whose seeds are derived up front, so the worker count only
//! changes wall time: results are collected in item order.

use std::time::Instant;

use mlsbm_core::experiment::{initialize, prepare_replicate, run_method, score, ExperimentSpec, Method, RunOptions, Sweep};
use mlsbm_core::generate::Scenario;
use mlsbm_core::rng::derive_seed;
use mlsbm_core::spectral::InitLayer;
use mlsbm_core::{Assignment, Mat, MultiLayerGraph};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::report::ResultRow;

/// Replicates per grid point when the spec file does not say.
pub const DEFAULT_REPLICATES: usize = 20;

/// JSON form of an experiment. Only the two non-swept sizes are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub sweep: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    pub grid: Vec<usize>,
    pub scenario: String,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
    /// 0-based layer used for the spectral initialization.
    #[serde(default)]
    pub init_layer: Option<usize>,
    #[serde(default)]
    pub random_layer: bool,
}

pub fn parse_methods<S: AsRef<str>>(names: &[S]) -> Result<Vec<Method>> {
    names
        .iter()
        .map(|s| {
            let s = s.as_ref();
            Method::parse(s).ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
        })
        .collect()
}

impl ExperimentFile {
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let sweep = Sweep::parse(&self.sweep).ok_or_else(|| Error::invalid(format!("unknown sweep {:?}", self.sweep)))?;
        let scenario =
            Scenario::parse(&self.scenario).ok_or_else(|| Error::invalid(format!("unknown scenario {:?}", self.scenario)))?;
        let need = |v: Option<usize>, name: &str, swept: bool| -> Result<usize> {
            match (v, swept) {
                (Some(v), _) => Ok(v),
                (None, true) => Ok(0),
                (None, false) => Err(Error::invalid(format!("{name} is required for sweep {}", sweep.name()))),
            }
        };
        let methods = match &self.methods {
            Some(names) => parse_methods(names)?,
            None => vec![Method::Mlsbm, Method::Rmlsbm, Method::AggSbm, Method::Majority, Method::SingleLayers],
        };
        let init_layer = if self.random_layer {
            InitLayer::Random
        } else {
            InitLayer::Index(self.init_layer.unwrap_or(0))
        };
        let spec = ExperimentSpec {
            sweep,
            n: need(self.n, "n", sweep == Sweep::VaryN)?,
            k: need(self.k, "k", sweep == Sweep::VaryK)?,
            m: need(self.m, "m", sweep == Sweep::VaryM)?,
            grid: self.grid.clone(),
            scenario,
            replicates: self.replicates.unwrap_or(DEFAULT_REPLICATES),
            seed: self.seed,
            methods,
            init_layer,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarnessOptions {
    /// Worker threads; `None` lets rayon choose.
    pub workers: Option<usize>,
    /// Record per-method wall time in the rows.
    pub record_time: bool,
    pub run: RunOptions,
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

struct Job<'a> {
    graph: &'a MultiLayerGraph,
    truth: &'a Assignment,
    init_tau: &'a Mat,
    layer_rates: Option<&'a [(f64, f64)]>,
    sweep: &'a str,
    value: usize,
    replicate: usize,
    seed: u64,
}

fn score_methods(job: &Job<'_>, methods: &[Method], opts: &HarnessOptions) -> Result<Vec<ResultRow>> {
    let k = job.truth.k();
    let mut rows = Vec::new();
    for &method in methods {
        let start = Instant::now();
        let outcomes = run_method(job.graph, k, method, job.init_tau, job.layer_rates, job.seed, &opts.run)?;
        let elapsed = start.elapsed().as_secs_f64();
        for outcome in outcomes {
            let s = score(job.truth, &outcome.z_hat)?;
            rows.push(ResultRow {
                sweep: job.sweep.to_owned(),
                value: job.value,
                method: outcome.method,
                replicate: job.replicate,
                seed: job.seed,
                nmi: s.nmi,
                ccr: s.ccr,
                misclustering_rate: s.misclustering_rate,
                elbo: outcome.elbo,
                wall_time_s: opts.record_time.then_some(elapsed),
            });
        }
    }
    Ok(rows)
}

/// Runs every grid point × replicate of `spec`. Rows are ordered by grid
/// point, then replicate, then method.
pub fn run_experiment(spec: &ExperimentSpec, opts: &HarnessOptions) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize, usize)> = spec
        .grid
        .iter()
        .enumerate()
        .flat_map(|(gi, &value)| (0..spec.replicates).map(move |r| (gi, value, r)))
        .collect();
    let per_job = with_pool(opts.workers, || {
        jobs.par_iter()
            .map(|&(gi, value, replicate)| -> Result<Vec<ResultRow>> {
                let (n, k, m) = spec.point(value);
                let seed = spec.replicate_seed(gi, replicate);
                let rep = prepare_replicate(n, k, m, spec.scenario, spec.init_layer, seed, &opts.run)?;
                let job = Job {
                    graph: &rep.instance.graph,
                    truth: &rep.instance.truth,
                    init_tau: &rep.init_tau,
                    layer_rates: Some(&rep.instance.layer_rates),
                    sweep: spec.sweep.name(),
                    value,
                    replicate,
                    seed,
                };
                score_methods(&job, &spec.methods, opts)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(per_job.into_iter().flatten().collect())
}

/// A named group of layers, e.g. the direct relations of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSubset {
    pub name: String,
    pub layers: Vec<usize>,
}

impl LayerSubset {
    pub fn all(g: &MultiLayerGraph) -> Self {
        LayerSubset {
            name: "all".into(),
            layers: (0..g.n_layers()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataSpec {
    /// Defaults to the number of label classes.
    pub k: Option<usize>,
    pub methods: Vec<Method>,
    pub subsets: Vec<LayerSubset>,
    pub runs: usize,
    pub seed: u64,
    pub init_layer: InitLayer,
}

/// Fits each method on each layer subset and scores against the dataset's
/// labels. The run seed is `derive_seed(seed, [subset index, run])`;
/// `value` in the rows is the number of layers in the subset.
pub fn run_real_data(data: &Dataset, spec: &RealDataSpec, opts: &HarnessOptions) -> Result<Vec<ResultRow>> {
    let truth = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("scoring needs a labels_file in the manifest"))?;
    if spec.methods.contains(&Method::Oracle) {
        return Err(Error::invalid("the oracle needs planted parameters and cannot run on real data"));
    }
    if spec.runs == 0 || spec.subsets.is_empty() || spec.methods.is_empty() {
        return Err(Error::invalid("need at least one run, layer subset and method"));
    }
    let k = spec.k.unwrap_or(truth.k());
    let graphs = spec
        .subsets
        .iter()
        .map(|s| data.graph.select_layers(&s.layers).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..graphs.len()).flat_map(|si| (0..spec.runs).map(move |r| (si, r))).collect();
    let per_job = with_pool(opts.workers, || {
        jobs.par_iter()
            .map(|&(si, run)| -> Result<Vec<ResultRow>> {
                let g = &graphs[si];
                let seed = derive_seed(spec.seed, &[si as u64, run as u64]);
                let init = initialize(g, k, spec.init_layer, seed, &opts.run)?;
                let job = Job {
                    graph: g,
                    truth,
                    init_tau: &init.tau,
                    layer_rates: None,
                    sweep: &spec.subsets[si].name,
                    value: g.n_layers(),
                    replicate: run,
                    seed,
                };
                score_methods(&job, &spec.methods, opts)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(per_job.into_iter().flatten().collect())
}
