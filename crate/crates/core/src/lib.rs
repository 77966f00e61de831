//! Community detection in multi-layer networks.
//!
//! The crate fits two blockmodels for graphs whose `M` layers share one
//! node set and one community structure:
//!
//! * **MLSBM**: every layer has its own `K x K` edge probability matrix.
//! * **RMLSBM**: `logit P[i,j,m] = pi[z_i, z_j] + beta[m]`, a single community
//!   matrix plus one sparsity offset per layer, with `sum(beta) = 0`.
//!
//! Both are fitted by variational EM ([`vem`]), initialized from a regularized
//! spectral clustering of one layer ([`spectral`]). Around that sit the
//! aggregation / majority-vote baselines ([`baselines`]), clustering metrics
//! ([`metrics`]), minimax-rate and threshold calculators ([`theory`]), the
//! known-parameter penalized likelihood rule ([`oracle`]) and the planted
//! partition generators used by the simulation harness ([`generate`],
//! [`experiment`]).
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! command-line tool and parallel experiment scheduling live in the `mlsbm`
//! crate.
#![no_std]
// Index loops mirror the matrix formulas.
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod baselines;
pub mod blockmodel;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod graph;
pub mod kmeans;
pub mod lbfgs;
pub mod lsap;
pub mod matrix;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod spectral;
pub mod theory;
pub mod vem;

pub(crate) mod math;

pub use assignment::{Assignment, GroundTruth};
pub use blockmodel::{LayerBlocks, MlsbmParams, RmlsbmParams};
pub use error::{Error, Result};
pub use graph::{Layer, MultiLayerGraph};
pub use matrix::Mat;
