//! Central finite-difference verification of the analytic backward passes.
//!
//! The reference loss is the batch-mean squared error between the network
//! output and a fixed target, evaluated in eval mode.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mse_batch, Activation, DenseLayer, GraphConvLayer, Layer, Mode, Network};
use crate::error::Result;
use crate::graph::generate;

fn loss(network: &Network, input: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<f64> {
    let output = network.infer(input)?;
    let (per_sample, _) = mse_batch(target, output.view())?;
    Ok(per_sample.mean().unwrap_or(0.0))
}

/// Gradients of the reference loss from the network's backward pass.
pub fn analytic_gradients(
    network: &mut Network,
    input: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let output = network.forward(input, Mode::Eval, &mut rng)?;
    let (_, grad) = mse_batch(target, output.view())?;
    Ok(network.backward(grad.view())?.1)
}

/// Max over all parameters of |a − n| / max(1, |a| + |n|), where `n` is the
/// central difference with step `epsilon` and `a` the supplied gradient.
pub fn compare_with_central_differences(
    network: &mut Network,
    input: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    epsilon: f64,
    analytic: &[Vec<f64>],
) -> Result<f64> {
    let sizes = network.parameter_sizes();
    let mut worst = 0.0_f64;
    for (t, &size) in sizes.iter().enumerate() {
        for j in 0..size {
            let original = network.parameters()[t][j];
            network.parameters_mut()[t][j] = original + epsilon;
            let plus = loss(network, input, target)?;
            network.parameters_mut()[t][j] = original - epsilon;
            let minus = loss(network, input, target)?;
            network.parameters_mut()[t][j] = original;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic[t][j];
            worst = worst.max((a - numeric).abs() / 1f64.max(a.abs() + numeric.abs()));
        }
    }
    Ok(worst)
}

/// Checks every parameter gradient of `network` against central differences.
/// The network should be free of dropout effects (checks run in eval mode) and
/// relu pre-activations should sit well away from zero.
pub fn gradient_check(
    network: &mut Network,
    input: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    epsilon: f64,
) -> Result<f64> {
    let analytic = analytic_gradients(network, input, target)?;
    compare_with_central_differences(network, input, target, epsilon, &analytic)
}

/// Shape of a randomly generated test network.
#[derive(Debug, Clone)]
pub struct RandomNetworkSpec {
    pub n: usize,
    pub graph_channels: Vec<usize>,
    pub dense_dims: Vec<usize>,
    pub batch: usize,
}

/// A random network, input batch and target for gradient checking, with relu
/// pre-activations at least `margin` from zero. Seeds are advanced until the
/// margin holds; the seed actually used is returned.
pub fn random_instance(
    spec: &RandomNetworkSpec,
    seed: u64,
    margin: f64,
) -> Result<(Network, Array2<f64>, Array2<f64>, u64)> {
    let mut seed = seed;
    loop {
        let (mut net, x, target) = build_instance(spec, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        net.forward(x.view(), Mode::Eval, &mut rng)?;
        if net.relu_margin() >= margin {
            return Ok((net, x, target, seed));
        }
        seed = seed.wrapping_add(0x9E37_79B9);
    }
}

fn build_instance(spec: &RandomNetworkSpec, seed: u64) -> Result<(Network, Array2<f64>, Array2<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    };
    let a_tilde = Arc::new(generate::random_connected(spec.n, 0.4, seed).renormalized_adjacency());
    let mut layers = Vec::new();
    let mut channels = 1;
    for &c in &spec.graph_channels {
        let theta = uniform(channels, c, &mut rng);
        layers.push(Layer::GraphConv(GraphConvLayer::new(a_tilde.clone(), theta, Activation::Relu)?));
        channels = c;
    }
    let mut width = spec.n * channels;
    for (i, &d) in spec.dense_dims.iter().enumerate() {
        let act = if i + 1 == spec.dense_dims.len() {
            Activation::Identity
        } else {
            Activation::Relu
        };
        let w = uniform(width, d, &mut rng);
        let b = Array1::from_shape_fn(d, |_| rng.random_range(-0.5..0.5));
        layers.push(Layer::Dense(DenseLayer::new(w, b, act)?));
        width = d;
    }
    let x = uniform(spec.batch, spec.n, &mut rng);
    let target = uniform(spec.batch, width, &mut rng);
    Ok((Network::new(layers)?, x, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_network_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
        let mut net = Network::new(vec![Layer::Dense(DenseLayer::new(w, b, Activation::Identity).unwrap())]).unwrap();
        let x = Array2::from_shape_fn((2, 4), |_| rng.random_range(-1.0..1.0));
        let t = Array2::from_shape_fn((2, 3), |_| rng.random_range(-1.0..1.0));
        let err = gradient_check(&mut net, x.view(), t.view(), 1e-5).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn graph_and_dense_stack() {
        let spec = RandomNetworkSpec {
            n: 6,
            graph_channels: vec![3, 2],
            dense_dims: vec![5, 6],
            batch: 2,
        };
        let (mut net, x, t, _) = random_instance(&spec, 7, 1e-4).unwrap();
        let err = gradient_check(&mut net, x.view(), t.view(), 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    // Single-channel and single-sample shapes make matrix products come back
    // column-major, which the vertex-axis reshapes must tolerate.
    #[test]
    fn degenerate_widths() {
        for batch in 1..=3 {
            for c in 1..=3 {
                let spec = RandomNetworkSpec {
                    n: 4,
                    graph_channels: vec![c, 1],
                    dense_dims: vec![1],
                    batch,
                };
                let (mut net, x, t, _) = random_instance(&spec, 3, 1e-4).unwrap();
                let err = gradient_check(&mut net, x.view(), t.view(), 1e-5).unwrap();
                assert!(err < 1e-4, "batch {batch}, channels {c}: {err}");
            }
        }
    }

    #[test]
    fn detects_corrupted_backward() {
        let spec = RandomNetworkSpec {
            n: 5,
            graph_channels: vec![2],
            dense_dims: vec![4, 5],
            batch: 2,
        };
        let (mut net, x, t, _) = random_instance(&spec, 3, 1e-4).unwrap();
        let mut grads = analytic_gradients(&mut net, x.view(), t.view()).unwrap();
        // flip the sign of the graph-convolution gradient
        grads[0].iter_mut().for_each(|g| *g = -*g);
        let err = compare_with_central_differences(&mut net, x.view(), t.view(), 1e-5, &grads).unwrap();
        assert!(err > 0.1, "{err}");
    }
}
