use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use super::Activation;
use crate::error::{Error, Result};
use crate::graph::{max_asymmetry, SYMMETRY_TOLERANCE};

/// One graph convolution layer, Y = σ(Ã X Θ).
///
/// Batches are `(batch, n · channels)` matrices whose rows are the per-vertex
/// channel vectors concatenated in vertex order, so a layer's output is already
/// the flattened feature map.
#[derive(Debug, Clone)]
pub struct GraphConvLayer {
    a_tilde: Arc<Array2<f64>>,
    theta: Array2<f64>,
    activation: Activation,
}

/// Values retained from the forward pass.
#[derive(Debug, Clone)]
pub struct GraphConvCache {
    /// Ã X, shape `(batch · n, c_in)`.
    propagated: Array2<f64>,
    /// Ã X Θ, shape `(batch · n, c_out)`.
    pre_activation: Array2<f64>,
}

impl GraphConvCache {
    pub fn pre_activation(&self) -> &Array2<f64> {
        &self.pre_activation
    }
}

impl GraphConvLayer {
    pub fn new(a_tilde: Arc<Array2<f64>>, theta: Array2<f64>, activation: Activation) -> Result<Self> {
        let (rows, cols) = a_tilde.dim();
        if rows != cols {
            return Err(Error::NonSquare { rows, cols });
        }
        let asym = max_asymmetry(a_tilde.view());
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("graph convolution weights must be finite".into()));
        }
        Ok(GraphConvLayer {
            a_tilde,
            theta,
            activation,
        })
    }

    pub fn n(&self) -> usize {
        self.a_tilde.nrows()
    }

    pub fn in_channels(&self) -> usize {
        self.theta.nrows()
    }

    pub fn out_channels(&self) -> usize {
        self.theta.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.n() * self.in_channels()
    }

    pub fn output_dim(&self) -> usize {
        self.n() * self.out_channels()
    }

    pub fn theta(&self) -> &Array2<f64> {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut Array2<f64> {
        &mut self.theta
    }

    pub fn a_tilde(&self) -> &Arc<Array2<f64>> {
        &self.a_tilde
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Applies `op` (n × n) along the vertex axis of a `(batch, n · c)` matrix.
    /// Matrix products may come back column-major, so every reshape below is
    /// preceded by a conversion to row-major.
    fn propagate(op: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>, c: usize) -> Array2<f64> {
        let batch = x.nrows();
        let n = op.nrows();
        let by_vertex = x
            .into_shape_with_order((batch, n, c))
            .expect("caller checked shape")
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((n, batch * c))
            .expect("standard layout");
        op.dot(&by_vertex)
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((n, batch, c))
            .expect("standard layout")
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((batch * n, c))
            .expect("standard layout")
    }

    fn check_width(&self, x: ArrayView2<'_, f64>, width: usize) -> Result<()> {
        if x.ncols() != width {
            return Err(Error::ShapeMismatch {
                expected: vec![x.nrows(), width],
                found: vec![x.nrows(), x.ncols()],
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, GraphConvCache)> {
        self.check_width(x, self.input_dim())?;
        let batch = x.nrows();
        let x = x.as_standard_layout();
        let propagated = Self::propagate(self.a_tilde.view(), x.view(), self.in_channels());
        let pre_activation = propagated.dot(&self.theta);
        let y = pre_activation
            .mapv(|v| self.activation.apply(v))
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((batch, self.output_dim()))
            .expect("standard layout");
        Ok((
            y,
            GraphConvCache {
                propagated,
                pre_activation,
            },
        ))
    }

    /// Forward pass for a single `n × c_in` signal.
    pub fn forward_signal(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, GraphConvCache)> {
        if x.dim() != (self.n(), self.in_channels()) {
            return Err(Error::ShapeMismatch {
                expected: vec![self.n(), self.in_channels()],
                found: vec![x.nrows(), x.ncols()],
            });
        }
        let flat = x.as_standard_layout().into_owned().into_shape_with_order((1, self.input_dim())).expect("standard layout");
        let (y, cache) = self.forward(flat.view())?;
        let y = y.into_shape_with_order((self.n(), self.out_channels())).expect("standard layout");
        Ok((y, cache))
    }

    /// Returns `(grad_x, grad_theta)` given ∂loss/∂Y.
    ///
    /// With G = ∂loss/∂Y ⊙ σ′(Ã X Θ): ∂loss/∂Θ = (Ã X)ᵀ G and ∂loss/∂X = Ãᵀ G Θᵀ.
    pub fn backward(
        &self,
        grad_y: ArrayView2<'_, f64>,
        cache: &GraphConvCache,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_width(grad_y, self.output_dim())?;
        let batch = grad_y.nrows();
        if cache.pre_activation.nrows() != batch * self.n() {
            return Err(Error::ShapeMismatch {
                expected: vec![cache.pre_activation.nrows() / self.n().max(1), self.output_dim()],
                found: vec![batch, grad_y.ncols()],
            });
        }
        let grad_y = grad_y.as_standard_layout();
        let mut g = grad_y
            .view()
            .into_shape_with_order((batch * self.n(), self.out_channels()))
            .expect("standard layout")
            .to_owned();
        if self.activation != Activation::Identity {
            g.zip_mut_with(&cache.pre_activation, |gv, &p| *gv *= self.activation.derivative(p));
        }
        let grad_theta = cache.propagated.t().dot(&g);
        let grad_propagated = g.dot(&self.theta.t()).as_standard_layout().into_owned();
        let grad_propagated = grad_propagated
            .into_shape_with_order((batch, self.input_dim()))
            .expect("standard layout");
        let grad_x = Self::propagate(self.a_tilde.t(), grad_propagated.view(), self.in_channels())
            .into_shape_with_order((batch, self.input_dim()))
            .expect("standard layout");
        Ok((grad_x, grad_theta))
    }

    /// Smallest |pre-activation| in the cached batch, for relu layers.
    pub(crate) fn relu_margin(&self, cache: &GraphConvCache) -> Option<f64> {
        (self.activation == Activation::Relu)
            .then(|| cache.pre_activation.fold(f64::INFINITY, |m, v| m.min(v.abs())))
    }
}
