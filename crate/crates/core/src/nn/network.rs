use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::{DenseCache, DenseLayer, Dropout, GraphConvCache, GraphConvLayer, Mode};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Layer {
    GraphConv(GraphConvLayer),
    Dense(DenseLayer),
    Dropout(Dropout),
}

impl Layer {
    fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            Layer::GraphConv(l) => l.output_dim(),
            Layer::Dense(l) => l.output_dim(),
            Layer::Dropout(_) => input_dim,
        }
    }
}

#[derive(Debug, Clone)]
enum Cache {
    GraphConv(GraphConvCache),
    Dense(DenseCache),
    Dropout(Array2<f64>),
}

/// A feed-forward stack of layers over `(batch, features)` matrices.
///
/// Parameters are enumerated layer by layer: Θ for graph convolutions,
/// then weights and bias for dense layers. Gradients use the same order.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    caches: Vec<Cache>,
}

impl Network {
    /// Checks that consecutive layer widths agree.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut width: Option<usize> = None;
        for layer in &layers {
            let input = match layer {
                Layer::GraphConv(l) => Some(l.input_dim()),
                Layer::Dense(l) => Some(l.input_dim()),
                Layer::Dropout(_) => None,
            };
            if let (Some(w), Some(i)) = (width, input) {
                if w != i {
                    return Err(Error::DimensionMismatch { expected: w, found: i });
                }
            }
            width = width.or(input).map(|w| layer.output_dim(w));
        }
        Ok(Network {
            layers,
            caches: Vec::new(),
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        self.caches.clear();
        &mut self.layers
    }

    /// Runs the full stack, caching intermediates for [`Network::backward`].
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Array2<f64>> {
        self.caches.clear();
        let mut current = x.to_owned();
        for layer in &self.layers {
            let (next, cache) = match layer {
                Layer::GraphConv(l) => {
                    let (y, c) = l.forward(current.view())?;
                    (y, Cache::GraphConv(c))
                }
                Layer::Dense(l) => {
                    let (y, c) = l.forward(current.view())?;
                    (y, Cache::Dense(c))
                }
                Layer::Dropout(d) => {
                    let (y, mask) = d.apply(&current, mode, rng);
                    (y, Cache::Dropout(mask))
                }
            };
            self.caches.push(cache);
            current = next;
        }
        Ok(current)
    }

    /// Evaluation-mode pass through layers `0..=last`, without caching.
    pub fn forward_until(&self, x: ArrayView2<'_, f64>, last: usize) -> Result<Array2<f64>> {
        let mut current = x.to_owned();
        for layer in self.layers.iter().take(last + 1) {
            current = match layer {
                Layer::GraphConv(l) => l.forward(current.view())?.0,
                Layer::Dense(l) => l.forward(current.view())?.0,
                Layer::Dropout(_) => current,
            };
        }
        Ok(current)
    }

    pub fn infer(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.forward_until(x, self.layers.len().saturating_sub(1))
    }

    /// Back-propagates ∂loss/∂output through the cached forward pass, returning
    /// ∂loss/∂input and the flattened parameter gradients.
    pub fn backward(&self, grad_output: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Vec<Vec<f64>>)> {
        if self.caches.len() != self.layers.len() {
            return Err(Error::MissingCache);
        }
        let mut grad = grad_output.to_owned();
        let mut per_layer: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(&self.caches).rev() {
            match (layer, cache) {
                (Layer::GraphConv(l), Cache::GraphConv(c)) => {
                    let (gx, gt) = l.backward(grad.view(), c)?;
                    per_layer.push(vec![flatten(gt)]);
                    grad = gx;
                }
                (Layer::Dense(l), Cache::Dense(c)) => {
                    let g = l.backward(grad.view(), c)?;
                    per_layer.push(vec![flatten(g.weights), g.bias.to_vec()]);
                    grad = g.input;
                }
                (Layer::Dropout(d), Cache::Dropout(mask)) => {
                    grad = d.backward(&grad, mask);
                    per_layer.push(Vec::new());
                }
                _ => return Err(Error::MissingCache),
            }
        }
        let grads = per_layer.into_iter().rev().flatten().collect();
        Ok((grad, grads))
    }

    /// Smallest |pre-activation| of any relu unit in the cached pass.
    pub fn relu_margin(&self) -> f64 {
        self.layers
            .iter()
            .zip(&self.caches)
            .filter_map(|(layer, cache)| match (layer, cache) {
                (Layer::GraphConv(l), Cache::GraphConv(c)) => l.relu_margin(c),
                (Layer::Dense(l), Cache::Dense(c)) => l.relu_margin(c),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::GraphConv(_) => names.push(format!("layer{i}.theta")),
                Layer::Dense(_) => {
                    names.push(format!("layer{i}.weights"));
                    names.push(format!("layer{i}.bias"));
                }
                Layer::Dropout(_) => {}
            }
        }
        names
    }

    pub fn parameter_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::GraphConv(l) => shapes.push(l.theta().shape().to_vec()),
                Layer::Dense(l) => {
                    shapes.push(l.weights().shape().to_vec());
                    shapes.push(l.bias().shape().to_vec());
                }
                Layer::Dropout(_) => {}
            }
        }
        shapes
    }

    pub fn parameter_sizes(&self) -> Vec<usize> {
        self.parameter_shapes().iter().map(|s| s.iter().product()).collect()
    }

    /// Indices (in parameter order) of dense weight matrices, the tensors the
    /// L2 penalty applies to.
    pub fn dense_weight_indices(&self) -> Vec<usize> {
        let mut idx = 0;
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::GraphConv(_) => idx += 1,
                Layer::Dense(_) => {
                    out.push(idx);
                    idx += 2;
                }
                Layer::Dropout(_) => {}
            }
        }
        out
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::GraphConv(l) => out.push(l.theta().as_slice().expect("standard layout")),
                Layer::Dense(l) => {
                    out.push(l.weights().as_slice().expect("standard layout"));
                    out.push(l.bias().as_slice().expect("standard layout"));
                }
                Layer::Dropout(_) => {}
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::GraphConv(l) => out.push(l.theta_mut().as_slice_mut().expect("standard layout")),
                Layer::Dense(l) => {
                    let (w, b) = l.params_mut();
                    out.push(w.as_slice_mut().expect("standard layout"));
                    out.push(b.as_slice_mut().expect("standard layout"));
                }
                Layer::Dropout(_) => {}
            }
        }
        out
    }
}

fn flatten(a: Array2<f64>) -> Vec<f64> {
    if a.is_standard_layout() {
        a.into_raw_vec_and_offset().0
    } else {
        a.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use ndarray::{array, Array1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn width_mismatch_is_rejected() {
        let a = Layer::Dense(DenseLayer::new(Array2::zeros((3, 2)), Array1::zeros(2), Activation::Relu).unwrap());
        let b = Layer::Dense(DenseLayer::new(Array2::zeros((4, 2)), Array1::zeros(2), Activation::Relu).unwrap());
        assert!(Network::new(vec![a.clone(), Layer::Dropout(Dropout::new(0.5).unwrap()), b]).is_err());
        assert!(Network::new(vec![a]).is_ok());
    }

    #[test]
    fn backward_requires_forward() {
        let dense = DenseLayer::new(Array2::eye(2), Array1::zeros(2), Activation::Identity).unwrap();
        let mut net = Network::new(vec![Layer::Dense(dense)]).unwrap();
        assert!(matches!(net.backward(Array2::zeros((1, 2)).view()), Err(Error::MissingCache)));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        net.forward(array![[1.0, 2.0]].view(), Mode::Eval, &mut rng).unwrap();
        let (gx, grads) = net.backward(array![[1.0, 0.0]].view()).unwrap();
        assert_eq!(gx, array![[1.0, 0.0]]);
        assert_eq!(grads, vec![vec![1.0, 0.0, 2.0, 0.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn identity_graph_conv_equals_bias_free_dense() {
        let theta = array![[0.5, -1.0, 2.0], [1.5, 0.25, -0.75]];
        let conv = GraphConvLayer::new(Arc::new(Array2::eye(1)), theta.clone(), Activation::Identity).unwrap();
        let dense = DenseLayer::new(theta, Array1::zeros(3), Activation::Identity).unwrap();
        let x = array![[1.0, 2.0], [-3.0, 0.5]];
        assert_eq!(conv.forward(x.view()).unwrap().0, dense.forward(x.view()).unwrap().0);
    }

    #[test]
    fn parameter_bookkeeping() {
        let conv = GraphConvLayer::new(Arc::new(Array2::eye(2)), Array2::zeros((1, 3)), Activation::Relu).unwrap();
        let dense = DenseLayer::new(Array2::zeros((6, 4)), Array1::zeros(4), Activation::Relu).unwrap();
        let net = Network::new(vec![
            Layer::GraphConv(conv),
            Layer::Dense(dense),
            Layer::Dropout(Dropout::new(0.1).unwrap()),
        ])
        .unwrap();
        assert_eq!(net.parameter_shapes(), vec![vec![1, 3], vec![6, 4], vec![4]]);
        assert_eq!(net.dense_weight_indices(), vec![1]);
        assert_eq!(net.parameter_names(), vec!["layer0.theta", "layer1.weights", "layer1.bias"]);
    }
}
