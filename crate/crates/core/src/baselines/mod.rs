//! Linear and robust dimensionality-reduction baselines, and the surrogate
//! graphs used to ablate the graph prior.

mod gbf;
mod pca;
mod rpca;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;

pub use gbf::{gbf_basis, gbf_reconstruct, gbf_transform, LaplacianKind};
pub use pca::{pca_fit_transform, PcaModel};
pub use rpca::{default_lambda, rpca_decompose, RpcaOptions, RpcaResult};

/// Edge density of the random ablation graph.
pub const RANDOM_GRAPH_DENSITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationGraph {
    /// No edges; the renormalized adjacency is the identity.
    Identity,
    /// Seeded symmetric graph with uniform (0, 1] weights on a
    /// `RANDOM_GRAPH_DENSITY` fraction of vertex pairs.
    RandomSymmetric,
}

pub fn ablation_graph(kind: AblationGraph, n: usize, seed: u64) -> Graph {
    match kind {
        AblationGraph::Identity => Graph::empty(n),
        AblationGraph::RandomSymmetric => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = Array2::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < RANDOM_GRAPH_DENSITY {
                        let x = 1.0 - rng.random::<f64>();
                        w[[i, j]] = x;
                        w[[j, i]] = x;
                    }
                }
            }
            Graph::new(w).expect("valid by construction")
        }
    }
}
