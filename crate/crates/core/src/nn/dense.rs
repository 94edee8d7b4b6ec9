use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::Activation;
use crate::error::{Error, Result};

/// Fully connected layer y = σ(xW + b) over row-vector batches.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Array2<f64>,
    pre_activation: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseGradients {
    pub input: Array2<f64>,
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.ncols() {
            return Err(Error::ShapeMismatch {
                expected: vec![weights.ncols()],
                found: vec![bias.len()],
            });
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("dense parameters must be finite".into()));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Array2<f64>, &mut Array1<f64>) {
        (&mut self.weights, &mut self.bias)
    }

    fn check(&self, x: ArrayView2<'_, f64>, width: usize) -> Result<()> {
        if x.ncols() != width {
            return Err(Error::ShapeMismatch {
                expected: vec![x.nrows(), width],
                found: vec![x.nrows(), x.ncols()],
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, DenseCache)> {
        self.check(x, self.input_dim())?;
        let mut pre_activation = x.dot(&self.weights);
        pre_activation += &self.bias;
        let y = pre_activation.mapv(|v| self.activation.apply(v));
        Ok((
            y,
            DenseCache {
                input: x.to_owned(),
                pre_activation,
            },
        ))
    }

    pub fn backward(&self, grad_y: ArrayView2<'_, f64>, cache: &DenseCache) -> Result<DenseGradients> {
        self.check(grad_y, self.output_dim())?;
        if grad_y.nrows() != cache.input.nrows() {
            return Err(Error::ShapeMismatch {
                expected: vec![cache.input.nrows(), self.output_dim()],
                found: vec![grad_y.nrows(), grad_y.ncols()],
            });
        }
        let mut g = grad_y.to_owned();
        if self.activation != Activation::Identity {
            g.zip_mut_with(&cache.pre_activation, |gv, &p| *gv *= self.activation.derivative(p));
        }
        Ok(DenseGradients {
            input: g.dot(&self.weights.t()),
            weights: cache.input.t().dot(&g),
            bias: g.sum_axis(Axis(0)),
        })
    }

    /// Forward then backward in one call.
    pub fn forward_backward(
        &self,
        x: ArrayView2<'_, f64>,
        grad_y: ArrayView2<'_, f64>,
    ) -> Result<(Array2<f64>, DenseGradients)> {
        let (y, cache) = self.forward(x)?;
        let grads = self.backward(grad_y, &cache)?;
        Ok((y, grads))
    }

    pub(crate) fn relu_margin(&self, cache: &DenseCache) -> Option<f64> {
        (self.activation == Activation::Relu)
            .then(|| cache.pre_activation.fold(f64::INFINITY, |m, v| m.min(v.abs())))
    }
}
