//! The graph-convolutional autoencoder: stacked graph convolutions whose
//! flattened feature map feeds a dense encoder/decoder, trained end to end to
//! reconstruct its input. The bottleneck activation is the learned embedding.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{max_asymmetry, SYMMETRY_TOLERANCE};
use crate::nn::{
    glorot_bound, mse_batch, Activation, AdamConfig, AdamState, DenseLayer, Dropout, GraphConvLayer, Layer, Mode,
    Network,
};
use crate::synth::GraphSignalDataset;

/// Training is aborted when an epoch loss exceeds this multiple of the loss
/// on the first mini-batch before any update.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcaeConfig {
    /// Output channels of each graph convolution; empty for a plain autoencoder.
    pub graph_conv_channels: Vec<usize>,
    /// Widths of the dense layers; the last must equal the vertex count.
    pub dense_dims: Vec<usize>,
    /// Activation of the graph convolutions (identity for the linear ablation).
    pub conv_activation: Activation,
    pub dropout_rate: f64,
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl GcaeConfig {
    /// 16 and 5 graph channels followed by d-2000-50-2000-n.
    pub fn full(n: usize) -> Self {
        GcaeConfig {
            graph_conv_channels: vec![16, 5],
            dense_dims: vec![2000, 50, 2000, n],
            conv_activation: Activation::Relu,
            dropout_rate: 0.5,
            l2_lambda: 5e-4,
            learning_rate: 1e-3,
            epochs: 300,
            batch_size: 32,
            seed: 0,
        }
    }

    /// Symmetric plain autoencoder n-h₁-…-h_k-bottleneck-h_k-…-h₁-n.
    pub fn autoencoder(n: usize, hidden: &[usize], bottleneck: usize) -> Self {
        let mut dense_dims: Vec<usize> = hidden.to_vec();
        dense_dims.push(bottleneck);
        dense_dims.extend(hidden.iter().rev());
        dense_dims.push(n);
        GcaeConfig {
            graph_conv_channels: Vec::new(),
            dense_dims,
            ..Self::full(n)
        }
    }

    /// Index into `dense_dims` of the narrowest layer before the output.
    pub fn bottleneck_index(&self) -> Option<usize> {
        let encoder = self.dense_dims.split_last()?.1;
        encoder
            .iter()
            .enumerate()
            .min_by_key(|&(i, &d)| (d, i))
            .map(|(i, _)| i)
    }

    pub fn bottleneck_dim(&self) -> Option<usize> {
        self.bottleneck_index().map(|i| self.dense_dims[i])
    }

    /// Width of the flattened graph-convolution output, n · C_last.
    pub fn flatten_dim(&self, n: usize) -> usize {
        n * self.graph_conv_channels.last().copied().unwrap_or(1)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if n == 0 {
            return invalid("graph has no vertices".into());
        }
        if self.graph_conv_channels.contains(&0) || self.dense_dims.contains(&0) {
            return invalid("layer widths must be positive".into());
        }
        match self.dense_dims.last() {
            None => return invalid("at least one dense layer is required".into()),
            Some(&last) if last != n => {
                return invalid(format!("last dense dimension {last} must equal the signal dimension {n}"))
            }
            _ => {}
        }
        match self.bottleneck_dim() {
            None => return invalid("an encoder layer is required before the output layer".into()),
            Some(b) if b >= n => return invalid(format!("bottleneck {b} must be smaller than {n}")),
            _ => {}
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidRate(self.dropout_rate));
        }
        if !(self.l2_lambda >= 0.0) || !(self.learning_rate >= 0.0) {
            return invalid("l2_lambda and learning_rate must be nonnegative".into());
        }
        if self.batch_size == 0 {
            return invalid("batch size must be positive".into());
        }
        Ok(())
    }
}

/// Per-feature affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl Standardizer {
    pub fn identity(n: usize) -> Self {
        Standardizer {
            mean: Array1::zeros(n),
            scale: Array1::ones(n),
        }
    }

    /// Population statistics of the rows of `data`; constant columns keep
    /// scale 1.
    pub fn fit(data: ArrayView2<'_, f64>) -> Self {
        let mean = data.mean_axis(Axis(0)).expect("nonempty");
        let scale = data
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 });
        Standardizer { mean, scale }
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn scale(&self) -> &Array1<f64> {
        &self.scale
    }

    pub fn apply(&self, data: ArrayView2<'_, f64>) -> Array2<f64> {
        (&data - &self.mean) / &self.scale
    }

    pub fn invert(&self, data: ArrayView2<'_, f64>) -> Array2<f64> {
        &data * &self.scale + &self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean over samples of the squared reconstruction error ‖x̂ − x‖² in
    /// standardized units, with dropout active and the L2 term excluded.
    pub epoch_losses: Vec<f64>,
    pub final_loss: Option<f64>,
    pub seconds: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GcaeModel {
    network: Network,
    a_tilde: Arc<Array2<f64>>,
    config: GcaeConfig,
    bottleneck_layer: usize,
    standardizer: Standardizer,
    trained: bool,
}

impl GcaeModel {
    /// Builds the layer stack for `config` over the renormalized adjacency
    /// `a_tilde`, initializing weights Glorot-uniform from `config.seed`.
    pub fn build(config: GcaeConfig, a_tilde: Array2<f64>) -> Result<Self> {
        let (rows, cols) = a_tilde.dim();
        if rows != cols {
            return Err(Error::NonSquare { rows, cols });
        }
        let asym = max_asymmetry(a_tilde.view());
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        let n = rows;
        config.validate(n)?;
        let a_tilde = Arc::new(a_tilde);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut uniform = |rows: usize, cols: usize| {
            let bound = glorot_bound(rows, cols);
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..=bound))
        };

        let mut layers = Vec::new();
        let mut channels = 1;
        for &c in &config.graph_conv_channels {
            let theta = uniform(channels, c);
            layers.push(Layer::GraphConv(GraphConvLayer::new(
                a_tilde.clone(),
                theta,
                config.conv_activation,
            )?));
            channels = c;
        }
        let bottleneck = config.bottleneck_index().expect("validated");
        let mut bottleneck_layer = 0;
        let mut width = n * channels;
        let last = config.dense_dims.len() - 1;
        for (i, &d) in config.dense_dims.iter().enumerate() {
            let activation = if i == last {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let w = uniform(width, d);
            layers.push(Layer::Dense(DenseLayer::new(w, Array1::zeros(d), activation)?));
            if i == bottleneck {
                bottleneck_layer = layers.len() - 1;
            }
            if i != last && config.dropout_rate > 0.0 {
                layers.push(Layer::Dropout(Dropout::new(config.dropout_rate)?));
            }
            width = d;
        }

        Ok(GcaeModel {
            network: Network::new(layers)?,
            a_tilde,
            config,
            bottleneck_layer,
            standardizer: Standardizer::identity(n),
            trained: false,
        })
    }

    pub fn n(&self) -> usize {
        self.a_tilde.nrows()
    }

    pub fn config(&self) -> &GcaeConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn a_tilde(&self) -> &Array2<f64> {
        &self.a_tilde
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Copies of every parameter tensor in network order.
    pub fn parameter_values(&self) -> Vec<Vec<f64>> {
        self.network.parameters().iter().map(|p| p.to_vec()).collect()
    }

    /// Overwrites every parameter tensor; lengths must match
    /// [`Network::parameter_sizes`].
    pub fn set_parameter_values(&mut self, values: &[Vec<f64>]) -> Result<()> {
        let sizes = self.network.parameter_sizes();
        let found: Vec<usize> = values.iter().map(Vec::len).collect();
        if sizes != found {
            return Err(Error::ShapeMismatch { expected: sizes, found });
        }
        for (dst, src) in self.network.parameters_mut().into_iter().zip(values) {
            dst.copy_from_slice(src);
        }
        Ok(())
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.bottleneck_dim().expect("validated")
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: width,
            });
        }
        Ok(())
    }

    /// Embeddings and reconstructions (original units) for a batch of rows.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_width(x.ncols())?;
        let z = self.standardizer.apply(x);
        let embedding = self.network.forward_until(z.view(), self.bottleneck_layer)?;
        let mut rest = embedding.clone();
        for layer in &self.network.layers()[self.bottleneck_layer + 1..] {
            rest = match layer {
                Layer::Dense(l) => l.forward(rest.view())?.0,
                Layer::GraphConv(l) => l.forward(rest.view())?.0,
                Layer::Dropout(_) => rest,
            };
        }
        Ok((embedding, self.standardizer.invert(rest.view())))
    }

    /// Bottleneck activation and reconstruction of a single signal.
    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Result<(Array1<f64>, Array1<f64>)> {
        let (e, r) = self.forward_batch(x.insert_axis(Axis(0)))?;
        Ok((e.row(0).to_owned(), r.row(0).to_owned()))
    }

    pub fn embed(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if !self.trained {
            return Err(Error::ModelNotTrained);
        }
        Ok(self.forward(x)?.0)
    }

    /// Embeds every row. Untrained models are refused unless
    /// `allow_untrained` is set.
    pub fn embed_matrix(&self, x: ArrayView2<'_, f64>, allow_untrained: bool) -> Result<Array2<f64>> {
        if !self.trained && !allow_untrained {
            return Err(Error::ModelNotTrained);
        }
        self.check_width(x.ncols())?;
        let z = self.standardizer.apply(x);
        self.network.forward_until(z.view(), self.bottleneck_layer)
    }

    pub fn train(&mut self, data: &GraphSignalDataset) -> Result<TrainReport> {
        self.train_features(data.features().view())
    }

    /// Minimizes the mean squared reconstruction error of the standardized
    /// rows plus λ Σ‖W‖² over dense weights, with Adam on seeded shuffled
    /// mini-batches.
    pub fn train_features(&mut self, features: ArrayView2<'_, f64>) -> Result<TrainReport> {
        let start = Instant::now();
        let m = features.nrows();
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        self.check_width(features.ncols())?;
        self.standardizer = Standardizer::fit(features);
        let data = self.standardizer.apply(features);

        let cfg = self.config.clone();
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(cfg.learning_rate), &self.network.parameter_sizes());
        let l2_targets = self.network.dense_weight_indices();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..m).collect();
        let mut per_sample = vec![0.0; m];
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        let mut initial: Option<f64> = None;

        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size) {
                let x = data.select(Axis(0), batch);
                let out = self.network.forward(x.view(), Mode::Train, &mut rng)?;
                let (losses, grad) = mse_batch(x.view(), out.view())?;
                if initial.is_none() {
                    initial = Some(losses.iter().sum::<f64>() / losses.len() as f64);
                }
                for (&i, &l) in batch.iter().zip(&losses) {
                    per_sample[i] = l;
                }
                let (_, mut grads) = self.network.backward(grad.view())?;
                if cfg.l2_lambda > 0.0 {
                    let params = self.network.parameters();
                    for &t in &l2_targets {
                        for (g, w) in grads[t].iter_mut().zip(params[t]) {
                            *g += 2.0 * cfg.l2_lambda * w;
                        }
                    }
                }
                let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
                adam.step(&mut self.network.parameters_mut(), &grad_refs)?;
            }
            let loss = per_sample.iter().sum::<f64>() / m as f64;
            let limit = initial.map_or(f64::INFINITY, |l| l.max(f64::MIN_POSITIVE) * DIVERGENCE_FACTOR);
            if !loss.is_finite() || loss > limit {
                return Err(Error::NonfiniteLoss { epoch, loss });
            }
            epoch_losses.push(loss);
        }
        self.trained = true;
        Ok(TrainReport {
            final_loss: epoch_losses.last().copied(),
            epoch_losses,
            seconds: start.elapsed().as_secs_f64(),
            seed: cfg.seed,
        })
    }

    /// Writes config, seed and every tensor to a JSON checkpoint.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut tensors = vec![
            NamedTensor::matrix("a_tilde", &self.a_tilde),
            NamedTensor::vector("input_mean", self.standardizer.mean()),
            NamedTensor::vector("input_scale", self.standardizer.scale()),
        ];
        for ((name, shape), values) in self
            .network
            .parameter_names()
            .into_iter()
            .zip(self.network.parameter_shapes())
            .zip(self.network.parameters())
        {
            tensors.push(NamedTensor {
                name,
                shape,
                values: values.to_vec(),
            });
        }
        let doc = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            seed: self.config.seed,
            n: self.n(),
            trained: self.trained,
            config: self.config.clone(),
            tensors,
        };
        let text = serde_json::to_string_pretty(&doc)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::malformed(path, format!("unknown format {:?}", doc.format)));
        }
        let bad = |reason: String| Error::malformed(path, reason);
        let take = |name: &str, shape: &[usize]| -> Result<Vec<f64>> {
            let t = doc
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| bad(format!("missing tensor {name}")))?;
            if t.shape != shape || t.values.len() != shape.iter().product::<usize>() {
                return Err(bad(format!("tensor {name} has shape {:?}, expected {shape:?}", t.shape)));
            }
            Ok(t.values.clone())
        };
        let n = doc.n;
        let a_tilde = Array2::from_shape_vec((n, n), take("a_tilde", &[n, n])?).map_err(|e| bad(e.to_string()))?;
        let mut model = GcaeModel::build(doc.config.clone(), a_tilde).map_err(|e| bad(e.to_string()))?;
        model.standardizer = Standardizer {
            mean: Array1::from(take("input_mean", &[n])?),
            scale: Array1::from(take("input_scale", &[n])?),
        };
        let names = model.network.parameter_names();
        let shapes = model.network.parameter_shapes();
        let mut values = Vec::with_capacity(names.len());
        for (name, shape) in names.iter().zip(&shapes) {
            values.push(take(name, shape)?);
        }
        for (dst, src) in model.network.parameters_mut().into_iter().zip(values) {
            dst.copy_from_slice(&src);
        }
        model.trained = doc.trained;
        Ok(model)
    }
}

const CHECKPOINT_FORMAT: &str = "gcae-checkpoint/1";

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    seed: u64,
    n: usize,
    trained: bool,
    config: GcaeConfig,
    tensors: Vec<NamedTensor>,
}

/// A tensor stored by name with explicit shape and row-major values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl NamedTensor {
    fn matrix(name: &str, m: &Array2<f64>) -> Self {
        NamedTensor {
            name: name.into(),
            shape: m.shape().to_vec(),
            values: m.iter().copied().collect(),
        }
    }

    fn vector(name: &str, v: &Array1<f64>) -> Self {
        NamedTensor {
            name: name.into(),
            shape: vec![v.len()],
            values: v.to_vec(),
        }
    }
}
