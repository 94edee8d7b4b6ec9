//! Labelled two-class graph-signal datasets: the in-memory type, CSV
//! persistence, and a seeded generator of graph-smooth class structure
//! corrupted by Gaussian and impulsive noise.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{symmetric_eigendecomposition, Graph};

/// Samples (rows) over graph vertices (columns) with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignalDataset {
    features: Array2<f64>,
    labels: Vec<i8>,
    seed: Option<u64>,
}

impl GraphSignalDataset {
    /// Requires one ±1 label per row, both classes present, finite features.
    pub fn new(features: Array2<f64>, labels: Vec<i8>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidLabel(f64::from(bad)));
        }
        if !(labels.contains(&1) && labels.contains(&-1)) {
            return Err(Error::SingleClass);
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("features must be finite".into()));
        }
        Ok(GraphSignalDataset {
            features,
            labels,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Writes a CSV with a header `<prefix>0,…,<prefix>{N-1},label`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_labelled_csv(path, &self.features, &self.labels, "x")
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let header = reader
            .headers()
            .map_err(|e| Error::malformed(path, e.to_string()))?
            .clone();
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(Error::malformed(path, "file is empty"));
        }
        if header.len() < 2 || &header[header.len() - 1] != "label" {
            return Err(Error::malformed(path, "missing label column"));
        }
        let cols = header.len();
        let n = cols - 1;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let line = r + 2;
            let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
            if record.len() != cols {
                return Err(Error::malformed(
                    path,
                    format!("row {line} has {} columns, expected {cols}", record.len()),
                ));
            }
            for (c, cell) in record.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::malformed(path, format!("non-numeric cell {cell:?} at row {line}, column {}", c + 1))
                })?;
                if c < n {
                    values.push(v);
                } else if v == 1.0 || v == -1.0 {
                    labels.push(v as i8);
                } else {
                    return Err(Error::malformed(path, format!("label {v} at row {line} is not ±1")));
                }
            }
        }
        if labels.is_empty() {
            return Err(Error::malformed(path, "no data rows"));
        }
        let features = Array2::from_shape_vec((labels.len(), n), values)
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        GraphSignalDataset::new(features, labels).map_err(|e| Error::malformed(path, e.to_string()))
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        GraphSignalDataset::new(features, labels)
    }
}

/// Writes a feature matrix plus ±1 label column with a named header.
pub fn write_labelled_csv(
    path: impl AsRef<Path>,
    features: &Array2<f64>,
    labels: &[i8],
    prefix: &str,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut line: String = (0..features.ncols()).map(|j| format!("{prefix}{j},")).collect();
    line.push_str("label\n");
    out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    for (row, label) in features.rows().into_iter().zip(labels) {
        line.clear();
        for v in row {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&label.to_string());
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Additive corruption applied to every sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of white Gaussian noise.
    pub gaussian_sigma: f64,
    /// Per-entry probability of an impulsive spike.
    pub spike_prob: f64,
    /// Spike magnitude in units of the class-mean RMS.
    pub spike_scale: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            gaussian_sigma: 0.3,
            spike_prob: 0.05,
            spike_scale: 5.0,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            gaussian_sigma: 0.0,
            spike_prob: 0.0,
            spike_scale: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(Error::InvalidNoiseSpec(format!("gaussian_sigma {}", self.gaussian_sigma)));
        }
        if !(0.0..=1.0).contains(&self.spike_prob) {
            return Err(Error::InvalidNoiseSpec(format!("spike_prob {} outside [0, 1]", self.spike_prob)));
        }
        if !(self.spike_scale >= 0.0) || !self.spike_scale.is_finite() {
            return Err(Error::InvalidNoiseSpec(format!("spike_scale {}", self.spike_scale)));
        }
        Ok(())
    }
}

/// Parameters of [`generate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Samples labelled +1 and −1.
    pub per_class: (usize, usize),
    /// Number of lowest-frequency Laplacian eigenvectors spanning the signal.
    pub smooth_band: usize,
    pub noise: NoiseSpec,
    /// Half the distance between class means, in units of the per-entry RMS
    /// of their shared component.
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            per_class: (250, 250),
            smooth_band: 8,
            noise: NoiseSpec::default(),
            class_separation: 0.2,
            seed: 0,
        }
    }
}

/// Noiseless class means and the RMS used to scale spikes.
#[derive(Debug, Clone)]
pub struct ClassMeans {
    pub positive: Array1<f64>,
    pub negative: Array1<f64>,
    pub rms: f64,
}

fn rms(x: ArrayView1<'_, f64>) -> f64 {
    (x.dot(&x) / x.len().max(1) as f64).sqrt()
}

/// Class means built from the `smooth_band` lowest-frequency eigenvectors of
/// the normalized Laplacian of `g`: a shared unit-RMS component plus or minus
/// `class_separation` times a second unit-RMS component.
pub fn class_means(g: &Graph, spec: &SynthSpec) -> Result<ClassMeans> {
    let n = g.n();
    if spec.smooth_band == 0 || spec.smooth_band > n {
        return Err(Error::BandTooWide {
            band: spec.smooth_band,
            n,
        });
    }
    let decomp = symmetric_eigendecomposition(&g.normalized_laplacian()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let band_signal = |rng: &mut ChaCha8Rng| {
        let mut coeffs = Array1::zeros(n);
        for c in coeffs.iter_mut().take(spec.smooth_band) {
            *c = rng.sample::<f64, _>(StandardNormal);
        }
        let x = decomp.igft(coeffs.view()).expect("length n");
        let r = rms(x.view());
        if r > 0.0 {
            x / r
        } else {
            x
        }
    };
    let shared = band_signal(&mut rng);
    let direction = band_signal(&mut rng);
    let positive = &shared + &(&direction * spec.class_separation);
    let negative = &shared - &(&direction * spec.class_separation);
    let rms = 0.5 * (rms(positive.view()) + rms(negative.view()));
    Ok(ClassMeans {
        positive,
        negative,
        rms,
    })
}

/// Draws a labelled dataset: positives first, then negatives. Each sample is
/// its class mean plus white Gaussian noise plus independent spikes of
/// magnitude `spike_scale · rms` and random sign.
pub fn generate_dataset(g: &Graph, spec: &SynthSpec) -> Result<GraphSignalDataset> {
    spec.noise.validate()?;
    if !spec.class_separation.is_finite() || spec.class_separation < 0.0 {
        return Err(Error::InvalidConfig(format!("class separation {}", spec.class_separation)));
    }
    let means = class_means(g, spec)?;
    let n = g.n();
    let (pos, neg) = spec.per_class;
    let m = pos + neg;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let noise = spec.noise;
    let spike = noise.spike_scale * means.rms;
    let mut features = Array2::zeros((m, n));
    let mut labels = Vec::with_capacity(m);
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        let (label, mean) = if i < pos {
            (1, &means.positive)
        } else {
            (-1, &means.negative)
        };
        labels.push(label);
        for (v, &mu) in row.iter_mut().zip(mean) {
            let mut x = mu;
            if noise.gaussian_sigma > 0.0 {
                x += noise.gaussian_sigma * rng.sample::<f64, _>(StandardNormal);
            }
            if noise.spike_prob > 0.0 && rng.random::<f64>() < noise.spike_prob {
                x += if rng.random::<bool>() { spike } else { -spike };
            }
            *v = x;
        }
    }
    Ok(GraphSignalDataset::new(features, labels)?.with_seed(spec.seed))
}
