//! Synthetic multi-layer graphs.

use alloc::vec::Vec;

use rand::Rng;

use crate::assignment::{Assignment, GroundTruth};
use crate::blockmodel::LayerBlocks;
use crate::error::{Error, Result};
use crate::graph::{Layer, MultiLayerGraph};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Connectivity regime of the planted-partition benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Every layer sparse with a strong signal: `eps = 0.10 + U(-0.02, 0.02)`,
    /// `lambda = 3 eps`.
    AllStrong,
    /// Sparsity and signal vary by layer: `eps = 0.09 + U(-0.03, 0.03)`,
    /// `lambda = U(1.5, 3) eps`.
    Mixed,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::AllStrong => "all_strong",
            Scenario::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all_strong" => Some(Scenario::AllStrong),
            "mixed" => Some(Scenario::Mixed),
            _ => None,
        }
    }

    /// Draws `(eps, lambda)` for one layer.
    pub fn draw_layer(self, rng: &mut SimRng) -> (f64, f64) {
        match self {
            Scenario::AllStrong => {
                let eps = 0.10 + rng.gen_range(-0.02..0.02);
                (eps, 3.0 * eps)
            }
            Scenario::Mixed => {
                let eps = 0.09 + rng.gen_range(-0.03..0.03);
                (eps, rng.gen_range(1.5..3.0) * eps)
            }
        }
    }
}

/// Samples every layer independently: `A[m][i][j] ~ Bernoulli(pi[m][z_i][z_j])`
/// for `i < j`.
pub fn generate_mlsbm(z: &Assignment, pi: &LayerBlocks, seed: u64) -> Result<MultiLayerGraph> {
    if pi.k() != z.k() {
        return Err(Error::LengthMismatch {
            expected: z.k(),
            found: pi.k(),
        });
    }
    if let Some(&p) = pi.as_slice().iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let n = z.len();
    let mut rng = rng_from_seed(seed);
    let layers = (0..pi.n_layers())
        .map(|m| {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let p = pi.get(m, z.label(i), z.label(j));
                    if rng.gen::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            Layer::from_sorted_unique(n, edges)
        })
        .collect();
    MultiLayerGraph::new(n, layers)
}

/// Labels drawn i.i.d. uniform over `K` classes.
pub fn sample_labels(n: usize, k: usize, rng: &mut SimRng) -> Result<Assignment> {
    Assignment::new((0..n).map(|_| rng.gen_range(0..k)).collect(), k)
}

/// `lambda` on the diagonal and `eps` elsewhere, one pair per layer.
pub fn planted_blocks(k: usize, rates: &[(f64, f64)]) -> LayerBlocks {
    let mut pi = LayerBlocks::zeros(rates.len(), k);
    for (m, &(eps, lambda)) in rates.iter().enumerate() {
        for q in 0..k {
            for l in q..k {
                pi.set(m, q, l, if q == l { lambda } else { eps });
            }
        }
    }
    pi
}

/// A planted-partition draw with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub graph: MultiLayerGraph,
    pub truth: GroundTruth,
    pub pi: LayerBlocks,
    /// `(eps, lambda)` per layer.
    pub layer_rates: Vec<(f64, f64)>,
}

/// Planted partition with connectivity `lambda I + eps (J - I)` per layer.
pub fn generate_planted(
    n: usize,
    k: usize,
    n_layers: usize,
    scenario: Scenario,
    seed: u64,
) -> Result<PlantedInstance> {
    if k == 0 || n_layers == 0 {
        return Err(Error::invalid("K and M must be positive"));
    }
    if k > n {
        return Err(Error::TooManyClasses { k, n });
    }
    let mut rng = rng_from_seed(seed);
    let truth = sample_labels(n, k, &mut rng)?;
    let layer_rates: Vec<(f64, f64)> = (0..n_layers).map(|_| scenario.draw_layer(&mut rng)).collect();
    let pi = planted_blocks(k, &layer_rates);
    let graph = generate_mlsbm(&truth, &pi, derive_seed(seed, &[0x6564_6765]))?;
    Ok(PlantedInstance {
        graph,
        truth,
        pi,
        layer_rates,
    })
}
