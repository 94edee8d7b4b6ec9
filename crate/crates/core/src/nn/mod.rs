//! Differentiable layers with hand-written backward passes, the training
//! objective pieces, Adam, and a finite-difference gradient checker.

mod adam;
mod dense;
mod dropout;
pub mod gradcheck;
mod graph_conv;
mod loss;
mod network;

use serde::{Deserialize, Serialize};

pub use adam::{AdamConfig, AdamState};
pub use dense::{DenseCache, DenseGradients, DenseLayer};
pub use dropout::Dropout;
pub use gradcheck::gradient_check;
pub use graph_conv::{GraphConvCache, GraphConvLayer};
pub use loss::{l2_penalty, mse_batch, mse_loss};
pub use network::{Layer, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation value.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Glorot-uniform bound √(6 / (fan_in + fan_out)).
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
