//! Manifest, edge-list and label file formats.
//!
//! * Manifest: JSON `{"n_nodes": N, "layer_files": [...], "labels_file": ...}`.
//!   Relative paths resolve against the manifest's directory. An optional
//!   `layer_names` list names the layers (defaults to the file stems).
//! * Edge list: one `i j` pair per line, 1-based, whitespace separated;
//!   `#` starts a comment. Duplicates (in either orientation) are dropped.
//! * Labels: one integer per line, `N` lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mlsbm_core::graph::symmetrize_layer;
use mlsbm_core::{Assignment, Layer, MultiLayerGraph};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_nodes: usize,
    pub layer_files: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_names: Option<Vec<String>>,
}

/// A graph loaded from a manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: MultiLayerGraph,
    pub labels: Option<Assignment>,
    pub layer_names: Vec<String>,
    /// Duplicate edges dropped while loading, summed over layers.
    pub duplicates: usize,
}

impl Dataset {
    /// Indices of the named layers, in the order given.
    pub fn layer_indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|name| {
                self.layer_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::invalid(format!("no layer named {name:?}")))
            })
            .collect()
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(idx, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((idx + 1, line))
    })
}

/// Parses 1-based pairs into 0-based pairs. Range checks are left to the
/// graph constructors except for index 0, which has no 0-based counterpart.
pub fn parse_pairs(text: &str, path: &Path) -> Result<Vec<(usize, usize)>> {
    let parse_err = |line, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut pairs = Vec::new();
    for (line, content) in data_lines(text) {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(line, format!("expected 2 node indices, found {}", tokens.len())));
        }
        let mut ends = [0usize; 2];
        for (slot, tok) in ends.iter_mut().zip(&tokens) {
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err(line, format!("not a node index: {tok:?}")))?;
            if v == 0 {
                return Err(parse_err(line, "node indices are 1-based".into()));
            }
            *slot = v - 1;
        }
        pairs.push((ends[0], ends[1]));
    }
    Ok(pairs)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(usize, usize)>> {
    parse_pairs(&read_to_string(path)?, path)
}

/// Reads one undirected layer; returns it with the duplicate count.
pub fn read_edge_list(path: &Path, n_nodes: usize) -> Result<(Layer, usize)> {
    let pairs = read_pairs(path)?;
    Ok(Layer::from_pairs(n_nodes, pairs)?)
}

/// Writes `i j` lines (1-based, `i < j`, sorted).
pub fn write_edge_list(path: &Path, layer: &Layer) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        for &(i, j) in layer.edges() {
            writeln!(w, "{} {}", i + 1, j + 1)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Parses a labels file. Distinct label values are mapped, in increasing
/// order, onto classes `0..K`; a file using `1..K` maps to itself.
pub fn parse_labels(text: &str, path: &Path, n_nodes: Option<usize>) -> Result<Assignment> {
    let mut raw = Vec::new();
    for (line, content) in data_lines(text) {
        let v: i64 = content.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("not an integer label: {content:?}"),
        })?;
        raw.push(v);
    }
    if let Some(n) = n_nodes {
        if raw.len() != n {
            return Err(mlsbm_core::Error::LengthMismatch { expected: n, found: raw.len() }.into());
        }
    }
    let classes: BTreeMap<i64, usize> = {
        let mut values = raw.clone();
        values.sort_unstable();
        values.dedup();
        values.into_iter().enumerate().map(|(c, v)| (v, c)).collect()
    };
    let k = classes.len().max(1);
    Ok(Assignment::new(raw.iter().map(|v| classes[v]).collect(), k)?)
}

pub fn read_labels(path: &Path, n_nodes: Option<usize>) -> Result<Assignment> {
    parse_labels(&read_to_string(path)?, path, n_nodes)
}

/// Writes 1-based labels, one per line.
pub fn write_labels(path: &Path, z: &Assignment) -> Result<()> {
    let mut out = String::with_capacity(4 * z.len());
    for l in z.to_one_based() {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Manifest { path: path.to_path_buf(), source })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads the graph (and labels, if listed) named by a manifest.
pub fn load_multilayer(manifest_path: &Path) -> Result<Dataset> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let n = manifest.n_nodes;
    if manifest.layer_files.is_empty() {
        return Err(Error::invalid(format!("{}: no layer files", manifest_path.display())));
    }
    let mut layers = Vec::with_capacity(manifest.layer_files.len());
    let mut duplicates = 0;
    for file in &manifest.layer_files {
        let (layer, dups) = read_edge_list(&resolve(base, file), n)?;
        layers.push(layer);
        duplicates += dups;
    }
    let layer_names = match manifest.layer_names {
        Some(names) if names.len() == layers.len() => names,
        Some(names) => {
            return Err(mlsbm_core::Error::LengthMismatch { expected: layers.len(), found: names.len() }.into())
        }
        None => manifest
            .layer_files
            .iter()
            .map(|f| f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            .collect(),
    };
    let labels = match &manifest.labels_file {
        Some(f) => Some(read_labels(&resolve(base, f), Some(n))?),
        None => None,
    };
    Ok(Dataset {
        graph: MultiLayerGraph::new(n, layers)?,
        labels,
        layer_names,
        duplicates,
    })
}

/// Writes `manifest.json`, `layer_<m>.txt` and (if given) `labels.txt` into
/// `dir`, returning the manifest path. Reloading gives an identical graph.
pub fn save_multilayer(dir: &Path, g: &MultiLayerGraph, labels: Option<&Assignment>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layer_files = Vec::with_capacity(g.n_layers());
    for (m, layer) in g.layers().iter().enumerate() {
        let name = PathBuf::from(format!("layer_{m}.txt"));
        write_edge_list(&dir.join(&name), layer)?;
        layer_files.push(name);
    }
    let labels_file = match labels {
        Some(z) => {
            let name = PathBuf::from("labels.txt");
            write_labels(&dir.join(&name), z)?;
            Some(name)
        }
        None => None,
    };
    let manifest = Manifest {
        n_nodes: g.n_nodes(),
        layer_files,
        labels_file,
        layer_names: None,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Directed edge list in, undirected edge list out. Returns the number of
/// undirected edges written.
pub fn convert_directed(input: &Path, output: &Path, n_nodes: usize) -> Result<usize> {
    let pairs = read_pairs(input)?;
    let layer = symmetrize_layer(&pairs, n_nodes)?;
    write_edge_list(output, &layer)?;
    Ok(layer.edge_count())
}
