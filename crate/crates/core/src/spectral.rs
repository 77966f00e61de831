//! Initial responsibilities from one layer: regularized spectral embedding,
//! k-means, a single-layer variational fit, then softening.

use alloc::vec::Vec;

use rand::Rng;

use crate::baselines::fit_single_layer_sbm;
use crate::eigen::{top_eigenpairs, EigenOptions};
use crate::error::{Error, Result};
use crate::graph::{Layer, MultiLayerGraph};
use crate::kmeans::kmeans;
use crate::math::sqrt;
use crate::matrix::Mat;
use crate::rng::{derive_seed, rng_from_seed};
use crate::vem::VemOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// `N x K`, orthonormal columns.
    pub coords: Mat,
    /// Sorted by decreasing magnitude.
    pub eigenvalues: Vec<f64>,
}

/// Leading `k` eigenvectors (by magnitude) of `D^{-1/2} A D^{-1/2}` with
/// `D = diag(degree + reg)`. `reg` defaults to the mean degree.
pub fn spectral_embed(layer: &Layer, k: usize, reg: Option<f64>) -> Result<SpectralEmbedding> {
    let n = layer.n_nodes();
    if k > n {
        return Err(Error::TooManyClasses { k, n });
    }
    let degrees = layer.degrees();
    let reg = match reg {
        Some(r) if r < 0.0 || !r.is_finite() => {
            return Err(Error::invalid("regularization must be nonnegative"))
        }
        Some(r) => r,
        None if n > 0 => degrees.iter().sum::<usize>() as f64 / n as f64,
        None => 0.0,
    };
    let scale: Vec<f64> = degrees
        .iter()
        .map(|&d| {
            let t = d as f64 + reg;
            if t > 0.0 {
                1.0 / sqrt(t)
            } else {
                0.0
            }
        })
        .collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            let s: f64 = layer.neighbors(i).iter().map(|&j| scale[j] * x[j]).sum();
            y[i] = scale[i] * s;
        }
    };
    let pairs = top_eigenpairs(n, k, apply, &EigenOptions::default())?;
    Ok(SpectralEmbedding {
        coords: pairs.vectors,
        eigenvalues: pairs.values,
    })
}

/// Which layer seeds the initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitLayer {
    Index(usize),
    /// A layer drawn uniformly with the init seed.
    Random,
}

impl Default for InitLayer {
    fn default() -> Self {
        InitLayer::Index(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Degree regularization; `None` uses the mean degree.
    pub reg: Option<f64>,
    pub kmeans_restarts: usize,
    /// Mass spread over the other classes of each softened row.
    pub rho: f64,
    pub refine: VemOptions,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            reg: None,
            kmeans_restarts: 10,
            rho: 0.1,
            refine: VemOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    pub tau: Mat,
    pub layer_index: usize,
}

/// Initial responsibilities with default options.
pub fn spectral_init(g: &MultiLayerGraph, layer: InitLayer, k: usize, seed: u64) -> Result<Mat> {
    Ok(spectral_init_with(g, layer, k, seed, &SpectralOptions::default())?.tau)
}

pub fn spectral_init_with(
    g: &MultiLayerGraph,
    layer: InitLayer,
    k: usize,
    seed: u64,
    opts: &SpectralOptions,
) -> Result<SpectralInit> {
    let n = g.n_nodes();
    if k == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    if k > n {
        return Err(Error::TooManyClasses { k, n });
    }
    let layer_index = match layer {
        InitLayer::Index(m) if m < g.n_layers() => m,
        InitLayer::Index(m) => {
            return Err(Error::invalid(alloc::format!(
                "init layer {m} out of range for {} layers",
                g.n_layers()
            )))
        }
        InitLayer::Random => rng_from_seed(derive_seed(seed, &[0x6c61_7965])).gen_range(0..g.n_layers()),
    };
    if k == 1 {
        return Ok(SpectralInit {
            tau: Mat::filled(n, 1, 1.0),
            layer_index,
        });
    }
    let source = g.layer(layer_index);
    let embedding = spectral_embed(source, k, opts.reg)?;
    let clusters = kmeans(&embedding.coords, k, opts.kmeans_restarts, derive_seed(seed, &[0x6b6d]))?;
    let refined = fit_single_layer_sbm(source, k, &clusters.to_soft_responsibilities(opts.rho), &opts.refine)?;
    let mut tau = refined.z_hat.to_soft_responsibilities(opts.rho);
    let uniform = 1.0 / k as f64;
    for i in 0..n {
        if source.degree(i) == 0 {
            tau.row_mut(i).iter_mut().for_each(|v| *v = uniform);
        }
    }
    Ok(SpectralInit { tau, layer_index })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cliques(sizes: &[usize]) -> Layer {
        let n: usize = sizes.iter().sum();
        let mut edges = Vec::new();
        let mut base = 0;
        for &s in sizes {
            for i in 0..s {
                for j in i + 1..s {
                    edges.push((base + i, base + j));
                }
            }
            base += s;
        }
        Layer::from_pairs(n, edges).unwrap().0
    }

    #[test]
    fn complete_graph_leading_vector_is_constant() {
        let emb = spectral_embed(&cliques(&[7]), 1, None).unwrap();
        let col = emb.coords.column(0);
        for v in &col {
            assert!((v - col[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn init_on_cliques_is_concentrated() {
        let g = MultiLayerGraph::single(cliques(&[6, 6]));
        let tau = spectral_init(&g, InitLayer::Index(0), 2, 4).unwrap();
        let own = |i: usize| if tau[(i, 0)] > tau[(i, 1)] { 0 } else { 1 };
        for i in 0..6 {
            assert_eq!(own(i), own(0));
            assert_eq!(own(6 + i), own(6));
        }
        assert_ne!(own(0), own(6));
        for i in 0..12 {
            let row = tau.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((row.iter().cloned().fold(1.0, f64::min) - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_nodes_get_uniform_rows() {
        let mut edges: Vec<(usize, usize)> = cliques(&[5, 5]).edges().to_vec();
        edges.retain(|&(i, j)| i < 10 && j < 10);
        let layer = Layer::from_pairs(12, edges).unwrap().0;
        let tau = spectral_init(&MultiLayerGraph::single(layer), InitLayer::Index(0), 2, 1).unwrap();
        assert_eq!(tau.row(11), &[0.5, 0.5]);
    }

    #[test]
    fn single_class_and_bad_layer() {
        let g = MultiLayerGraph::single(cliques(&[3, 3]));
        assert_eq!(spectral_init(&g, InitLayer::Index(0), 1, 0).unwrap(), Mat::filled(6, 1, 1.0));
        assert!(spectral_init(&g, InitLayer::Index(1), 2, 0).is_err());
    }
}
