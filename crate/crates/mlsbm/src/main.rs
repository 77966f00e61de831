use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mlsbm::harness::{
    parse_methods, run_experiment, run_real_data, ExperimentFile, HarnessOptions, LayerSubset, RealDataSpec,
};
use mlsbm::io::{convert_directed, load_multilayer, read_labels};
use mlsbm::report::{emit_csv, emit_svg_lineplot, write_csv, Metric, ResultRow};
use mlsbm::{Error, Result};
use mlsbm_core::experiment::{initialize, run_method, score, Method};
use mlsbm_core::metrics::misclustered_count;
use mlsbm_core::spectral::InitLayer;
use mlsbm_core::theory::{divergence_profile, max_imbalance, minimax_rate, threshold_strong, Model};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mlsbm", version, about = "Community detection in multi-layer graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct InitArgs {
    /// 0-based layer that seeds the spectral initialization.
    #[arg(long, conflicts_with = "random_layer")]
    init_layer: Option<usize>,
    /// Seed the initialization from a randomly drawn layer.
    #[arg(long)]
    random_layer: bool,
}

impl InitArgs {
    fn get(self) -> Option<InitLayer> {
        if self.random_layer {
            Some(InitLayer::Random)
        } else {
            self.init_layer.map(InitLayer::Index)
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model to the graph of a manifest and write 1-based labels.
    Fit {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        k: usize,
        /// mlsbm, rmlsbm, agg_sbm or majority.
        #[arg(long, default_value = "rmlsbm")]
        method: String,
        /// Comma-separated 0-based layers to use (default: all).
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        init: InitArgs,
        /// Labels file to write; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score methods against the manifest's labels over layer subsets.
    Real {
        #[arg(long)]
        manifest: PathBuf,
        /// Defaults to the number of label classes.
        #[arg(long)]
        k: Option<usize>,
        /// Repeatable; defaults to mlsbm, rmlsbm, agg_sbm, majority, single_layers.
        #[arg(long = "method")]
        methods: Vec<String>,
        /// Layer subset as NAME=NAMES_OR_INDICES, e.g. direct=mentions,follows,retweets.
        /// Repeatable; defaults to all layers.
        #[arg(long = "subset")]
        subsets: Vec<String>,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long)]
        workers: Option<usize>,
        /// CSV output; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a planted-partition sweep described by a JSON spec file.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Repeatable; overrides the spec's method list.
        #[arg(long = "method")]
        methods: Vec<String>,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long)]
        workers: Option<usize>,
        /// CSV output; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a mean ± sd plot.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Metric plotted in the SVG: nmi, ccr or misclustering_rate.
        #[arg(long, default_value = "nmi")]
        metric: String,
        /// Record per-method wall time (makes the CSV run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Compare two label files.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
    /// Divergences, minimax rates and strong-consistency thresholds for a
    /// two-parameter planted partition with P = a/N within, b/N between.
    Theory {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        k: usize,
        /// Per-layer within-community parameters, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        /// Per-layer between-community parameters, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<f64>,
        /// Class-size imbalance.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// Symmetrize a directed edge list.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        n: usize,
    },
}

fn print_json(v: &serde_json::Value) {
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn write_rows(rows: &[ResultRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => emit_csv(rows, path),
        None => {
            let stdout = std::io::stdout();
            write_csv(rows, stdout.lock()).map_err(|source| Error::Csv { path: "<stdout>".into(), source })
        }
    }
}

fn fit(
    manifest: &Path,
    k: usize,
    method: &str,
    layers: Option<Vec<usize>>,
    seed: u64,
    init: Option<InitLayer>,
    out: Option<&Path>,
) -> Result<()> {
    let method = parse_methods(&[method])?[0];
    if !matches!(method, Method::Mlsbm | Method::Rmlsbm | Method::AggSbm | Method::Majority) {
        return Err(Error::Invalid(format!("fit supports mlsbm, rmlsbm, agg_sbm and majority, not {}", method.name())));
    }
    let data = load_multilayer(manifest)?;
    let g = match layers {
        Some(l) => data.graph.select_layers(&l)?,
        None => data.graph.clone(),
    };
    let opts = HarnessOptions::default();
    let init = initialize(&g, k, init.unwrap_or_default(), seed, &opts.run)?;
    let outcome = run_method(&g, k, method, &init.tau, None, seed, &opts.run)?.remove(0);
    match out {
        Some(path) => mlsbm::io::write_labels(path, &outcome.z_hat)?,
        None => {
            let mut lock = std::io::stdout().lock();
            for l in outcome.z_hat.to_one_based() {
                let _ = writeln!(lock, "{l}");
            }
        }
    }
    let mut summary = json!({
        "method": outcome.method,
        "n_nodes": g.n_nodes(),
        "n_layers": g.n_layers(),
        "init_layer": init.layer_index,
        "elbo": outcome.elbo,
    });
    if let Some(truth) = &data.labels {
        let s = score(truth, &outcome.z_hat)?;
        summary["nmi"] = json!(s.nmi);
        summary["ccr"] = json!(s.ccr);
        summary["misclustering_rate"] = json!(s.misclustering_rate);
    }
    eprintln!("{}", serde_json::to_string(&summary).expect("json value serializes"));
    Ok(())
}

fn parse_subset(arg: &str, data: &mlsbm::io::Dataset) -> Result<LayerSubset> {
    let (name, list) = arg
        .split_once('=')
        .ok_or_else(|| Error::Invalid(format!("subset {arg:?} is not NAME=LAYERS")))?;
    let layers = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|tok| match tok.parse::<usize>() {
            Ok(i) => Ok(i),
            Err(_) => data.layer_indices(&[tok]).map(|v| v[0]),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerSubset { name: name.to_owned(), layers })
}

fn theory(n: f64, k: usize, a: &[f64], b: &[f64], s: f64) -> Result<()> {
    let profile = divergence_profile(a, b, n)?;
    let rate = |model| minimax_rate(&profile, k, s, model);
    let ln_n = n.ln();
    let alpha1: Vec<f64> = a.iter().map(|x| x / ln_n).collect();
    let alpha2: Vec<f64> = b.iter().map(|x| x / ln_n).collect();
    let threshold = |model| {
        threshold_strong(&alpha1, &alpha2, k, model)
            .ok()
            .map(|t| json!({"margin": t.margin, "above": t.above}))
    };
    print_json(&json!({
        "n": n,
        "k": k,
        "s": s,
        "max_imbalance": max_imbalance(),
        "divergence": {
            "per_layer": profile.per_layer,
            "total": profile.total(),
            "aggregate": profile.aggregate,
        },
        "minimax_rate": {
            "multilayer": rate(Model::Multilayer)?,
            "aggregate": rate(Model::Aggregate)?,
        },
        "threshold_strong": {
            "alpha1": alpha1,
            "alpha2": alpha2,
            "multilayer": threshold(Model::Multilayer),
            "aggregate": threshold(Model::Aggregate),
        },
    }));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { manifest, k, method, layers, seed, init, out } => {
            fit(&manifest, k, &method, layers, seed, init.get(), out.as_deref())
        }
        Command::Real { manifest, k, methods, subsets, replicates, seed, init, workers, out } => {
            let data = load_multilayer(&manifest)?;
            let methods = if methods.is_empty() {
                vec![Method::Mlsbm, Method::Rmlsbm, Method::AggSbm, Method::Majority, Method::SingleLayers]
            } else {
                parse_methods(&methods)?
            };
            let subsets = if subsets.is_empty() {
                vec![LayerSubset::all(&data.graph)]
            } else {
                subsets.iter().map(|s| parse_subset(s, &data)).collect::<Result<_>>()?
            };
            let spec = RealDataSpec {
                k,
                methods,
                subsets,
                runs: replicates,
                seed,
                init_layer: init.get().unwrap_or_default(),
            };
            let opts = HarnessOptions { workers, ..Default::default() };
            write_rows(&run_real_data(&data, &spec, &opts)?, out.as_deref())
        }
        Command::Simulate { spec, seed, replicates, methods, init, workers, out, svg, metric, timings } => {
            let text = std::fs::read_to_string(&spec).map_err(|source| Error::Io { path: spec.clone(), source })?;
            let mut file: ExperimentFile =
                serde_json::from_str(&text).map_err(|source| Error::Manifest { path: spec.clone(), source })?;
            if let Some(s) = seed {
                file.seed = s;
            }
            if replicates.is_some() {
                file.replicates = replicates;
            }
            if !methods.is_empty() {
                file.methods = Some(methods);
            }
            match init.get() {
                Some(InitLayer::Random) => file.random_layer = true,
                Some(InitLayer::Index(i)) => {
                    file.random_layer = false;
                    file.init_layer = Some(i);
                }
                None => {}
            }
            let metric = Metric::parse(&metric).ok_or_else(|| Error::Invalid(format!("unknown metric {metric:?}")))?;
            let spec = file.to_spec()?;
            let opts = HarnessOptions { workers, record_time: timings, ..Default::default() };
            let rows = run_experiment(&spec, &opts)?;
            write_rows(&rows, out.as_deref())?;
            if let Some(path) = svg {
                emit_svg_lineplot(&rows, metric, &path)?;
            }
            Ok(())
        }
        Command::Eval { truth, estimate } => {
            let z_true = read_labels(&truth, None)?;
            let z_hat = read_labels(&estimate, Some(z_true.len()))?;
            let s = score(&z_true, &z_hat)?;
            print_json(&json!({
                "n": z_true.len(),
                "nmi": s.nmi,
                "ccr": s.ccr,
                "misclustering_rate": s.misclustering_rate,
                "misclustered": misclustered_count(&z_true, &z_hat)?,
            }));
            Ok(())
        }
        Command::Theory { n, k, a, b, s } => theory(n, k, &a, &b, s),
        Command::Convert { input, output, n } => {
            let edges = convert_directed(&input, &output, n)?;
            eprintln!("wrote {edges} undirected edges to {}", output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
