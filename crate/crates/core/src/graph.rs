//! Multi-layer graph storage.
//!
//! Each layer keeps a sorted list of undirected edges `(i, j)` with `i < j`
//! and a CSR neighbor table. Nodes are 0-based internally.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One symmetric binary layer without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Layer {
    /// Builds a layer from unordered pairs. Returns the layer and the number
    /// of duplicate pairs that were dropped (`(i, j)` and `(j, i)` are the
    /// same pair).
    pub fn from_pairs<I>(n_nodes: usize, pairs: I) -> Result<(Layer, usize)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (i, j) in pairs {
            for index in [i, j] {
                if index >= n_nodes {
                    return Err(Error::NodeOutOfRange { index, n_nodes });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            edges.push(if i < j { (i, j) } else { (j, i) });
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        let duplicates = before - edges.len();
        Ok((Layer::from_sorted_unique(n_nodes, edges), duplicates))
    }

    /// Empty layer on `n_nodes` nodes.
    pub fn empty(n_nodes: usize) -> Layer {
        Layer::from_sorted_unique(n_nodes, Vec::new())
    }

    pub(crate) fn from_sorted_unique(n_nodes: usize, edges: Vec<(usize, usize)>) -> Layer {
        let mut degree = vec![0usize; n_nodes];
        for &(i, j) in &edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0; 2 * edges.len()];
        for &(i, j) in &edges {
            neighbors[fill[i]] = j;
            fill[i] += 1;
            neighbors[fill[j]] = i;
            fill[j] += 1;
        }
        for i in 0..n_nodes {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Layer {
            n_nodes,
            edges,
            offsets,
            neighbors,
        }
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted edges with `i < j`.
    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Dense 0/1 adjacency, for tests and tiny graphs.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.n_nodes]; self.n_nodes];
        for &(i, j) in &self.edges {
            a[i][j] = 1;
            a[j][i] = 1;
        }
        a
    }
}

/// `N` nodes, `M >= 1` layers over the same node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiLayerGraph {
    n_nodes: usize,
    layers: Vec<Layer>,
}

impl MultiLayerGraph {
    pub fn new(n_nodes: usize, layers: Vec<Layer>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        if layers.is_empty() {
            return Err(Error::invalid("graph needs at least one layer"));
        }
        if let Some(bad) = layers.iter().find(|l| l.n_nodes() != n_nodes) {
            return Err(Error::LengthMismatch {
                expected: n_nodes,
                found: bad.n_nodes(),
            });
        }
        Ok(MultiLayerGraph { n_nodes, layers })
    }

    /// Builds a graph from per-layer pair lists, returning the total number of
    /// dropped duplicates.
    pub fn from_edge_lists(n_nodes: usize, lists: &[Vec<(usize, usize)>]) -> Result<(Self, usize)> {
        let mut dups = 0;
        let mut layers = Vec::with_capacity(lists.len());
        for list in lists {
            let (layer, d) = Layer::from_pairs(n_nodes, list.iter().copied())?;
            dups += d;
            layers.push(layer);
        }
        Ok((MultiLayerGraph::new(n_nodes, layers)?, dups))
    }

    pub fn single(layer: Layer) -> Self {
        MultiLayerGraph {
            n_nodes: layer.n_nodes(),
            layers: vec![layer],
        }
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    pub fn layer(&self, m: usize) -> &Layer {
        &self.layers[m]
    }

    #[inline]
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Graph restricted to the given layers, in the given order.
    pub fn select_layers(&self, indices: &[usize]) -> Result<Self> {
        let layers = indices
            .iter()
            .map(|&m| {
                self.layers.get(m).cloned().ok_or_else(|| {
                    Error::invalid(alloc::format!("layer index {m} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MultiLayerGraph::new(self.n_nodes, layers)
    }

    pub fn total_pairs(&self) -> f64 {
        let n = self.n_nodes as f64;
        n * (n - 1.0) / 2.0
    }
}

/// Undirected layer from directed pairs: `{i, j}` is an edge iff `(i, j)` or
/// `(j, i)` appears. Self-loops are rejected.
pub fn symmetrize_layer(directed: &[(usize, usize)], n_nodes: usize) -> Result<Layer> {
    Layer::from_pairs(n_nodes, directed.iter().copied()).map(|(layer, _)| layer)
}

/// Per-layer average degree `2 |E_m| / N`.
pub fn average_degrees(g: &MultiLayerGraph) -> Vec<f64> {
    let n = g.n_nodes() as f64;
    g.layers()
        .iter()
        .map(|l| 2.0 * l.edge_count() as f64 / n)
        .collect()
}
