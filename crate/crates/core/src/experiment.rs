//! End-to-end evaluation runs: embed a labelled dataset with each requested
//! method, score the embedding by cross-validated linear SVM, and collect the
//! results into a report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    ablation_graph, gbf_basis, gbf_transform, pca_fit_transform, rpca_decompose, AblationGraph, LaplacianKind,
    RpcaOptions,
};
use crate::classify::{kfold_evaluate, CvResult, SvmParams};
use crate::error::{Error, ErrorKind, Result};
use crate::graph::Graph;
use crate::model::{GcaeConfig, GcaeModel};
use crate::nn::Activation;
use crate::synth::GraphSignalDataset;

pub const TOOLKIT_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Offsets added to the global seed for each stage.
pub const MODEL_SEED_OFFSET: u64 = 1000;
pub const RANDOM_GRAPH_SEED_OFFSET: u64 = 2000;
pub const CV_SEED_OFFSET: u64 = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub global: u64,
    pub model: u64,
    pub random_graph: u64,
    pub cv: u64,
}

impl SeedPlan {
    pub fn from_global(global: u64) -> Self {
        SeedPlan {
            global,
            model: global.wrapping_add(MODEL_SEED_OFFSET),
            random_graph: global.wrapping_add(RANDOM_GRAPH_SEED_OFFSET),
            cv: global.wrapping_add(CV_SEED_OFFSET),
        }
    }
}

/// Layer widths and optimizer settings shared by every learned method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScale {
    pub graph_conv_channels: Vec<usize>,
    /// Hidden width on either side of the bottleneck of the proposed model.
    pub hidden: usize,
    pub bottleneck: usize,
    /// Hidden width of the two-layer autoencoder.
    pub sae2_hidden: usize,
    /// Encoder widths of the four-layer autoencoder, before the bottleneck.
    pub sae4_hidden: Vec<usize>,
    pub dropout_rate: f64,
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl ModelScale {
    /// Widths used for 306-sensor recordings.
    pub fn full() -> Self {
        ModelScale {
            graph_conv_channels: vec![16, 5],
            hidden: 2000,
            bottleneck: 50,
            sae2_hidden: 2000,
            sae4_hidden: vec![5000, 1500, 2000],
            dropout_rate: 0.5,
            l2_lambda: 5e-4,
            learning_rate: 1e-3,
            epochs: 300,
            batch_size: 32,
        }
    }

    /// Narrower hidden layers and a shorter schedule for small graphs on a
    /// single core.
    pub fn desk() -> Self {
        ModelScale {
            hidden: 256,
            sae2_hidden: 256,
            sae4_hidden: vec![512, 160, 200],
            epochs: 100,
            ..Self::full()
        }
    }

    fn bottleneck_for(&self, n: usize) -> usize {
        self.bottleneck.min(n.saturating_sub(1)).max(1)
    }

    fn config(&self, graph_conv_channels: Vec<usize>, dense_dims: Vec<usize>, seed: u64) -> GcaeConfig {
        GcaeConfig {
            graph_conv_channels,
            dense_dims,
            conv_activation: Activation::Relu,
            dropout_rate: self.dropout_rate,
            l2_lambda: self.l2_lambda,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }

    pub fn gcae_config(&self, n: usize, seed: u64) -> GcaeConfig {
        let b = self.bottleneck_for(n);
        self.config(self.graph_conv_channels.clone(), vec![self.hidden, b, self.hidden, n], seed)
    }

    pub fn sae2_config(&self, n: usize, seed: u64) -> GcaeConfig {
        let b = self.bottleneck_for(n);
        self.config(Vec::new(), vec![self.sae2_hidden, b, self.sae2_hidden, n], seed)
    }

    pub fn sae4_config(&self, n: usize, seed: u64) -> GcaeConfig {
        let b = self.bottleneck_for(n);
        let GcaeConfig { dense_dims, .. } = GcaeConfig::autoencoder(n, &self.sae4_hidden, b);
        self.config(Vec::new(), dense_dims, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub scale: ModelScale,
    /// Components kept by PCA, robust PCA and GBF (capped by the data).
    pub components: usize,
    pub folds: usize,
    pub svm: SvmParams,
    pub gbf_laplacian: LaplacianKind,
    pub rpca_tol: f64,
    pub rpca_max_iter: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            scale: ModelScale::desk(),
            components: 50,
            folds: 10,
            svm: SvmParams::default(),
            gbf_laplacian: LaplacianKind::Normalized,
            rpca_tol: 1e-7,
            rpca_max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Raw,
    Pca,
    Rpca,
    Gbf,
    Sae2,
    Sae4,
    Gcae,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Raw,
        Method::Pca,
        Method::Rpca,
        Method::Gbf,
        Method::Sae2,
        Method::Sae4,
        Method::Gcae,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::Pca => "pca",
            Method::Rpca => "rpca",
            Method::Gbf => "gbf",
            Method::Sae2 => "sae2",
            Method::Sae4 => "sae4",
            Method::Gcae => "gcae",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Raw => "Raw data",
            Method::Pca => "PCA",
            Method::Rpca => "Robust PCA",
            Method::Gbf => "GBF",
            Method::Sae2 => "2-layer SAE",
            Method::Sae4 => "4-layer SAE",
            Method::Gcae => "GCAE",
        }
    }

    pub fn parse(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.key() == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GraphChoice {
    Estimated,
    Identity,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ActivationChoice {
    Nonlinear,
    Linear,
}

/// One configuration of the proposed model with its graph prior or
/// nonlinearity replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ablation {
    pub graph: GraphChoice,
    pub activation: ActivationChoice,
}

impl Ablation {
    pub const BASELINE: Ablation = Ablation {
        graph: GraphChoice::Estimated,
        activation: ActivationChoice::Nonlinear,
    };

    pub fn key(self) -> String {
        let g = match self.graph {
            GraphChoice::Estimated => "estimated",
            GraphChoice::Identity => "identity",
            GraphChoice::Random => "random",
        };
        let a = match self.activation {
            ActivationChoice::Nonlinear => "nonlinear",
            ActivationChoice::Linear => "linear",
        };
        format!("graph={g},activation={a}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub label: String,
    pub embedding_dim: usize,
    pub cv: CvResult,
    /// Final epoch reconstruction loss for learned methods.
    pub final_train_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub samples: usize,
    pub dimension: usize,
    pub positives: usize,
}

impl DatasetSummary {
    fn of(data: &GraphSignalDataset) -> Self {
        DatasetSummary {
            samples: data.len(),
            dimension: data.dim(),
            positives: data.labels().iter().filter(|&&y| y == 1).count(),
        }
    }
}

/// Deterministic record of one run; wall-clock timings are kept apart in
/// [`RunOutput`] so that identical runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub toolkit: String,
    pub version: String,
    pub experiment: String,
    pub seeds: SeedPlan,
    pub settings: ExperimentSettings,
    pub dataset: DatasetSummary,
    pub results: Vec<MethodResult>,
    /// Set when a numerical failure stopped the run early.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: EvaluationReport,
    pub timings: Vec<StageTiming>,
    /// The numerical error that ended the run, if any.
    pub error: Option<Error>,
}

impl EvaluationReport {
    pub fn result(&self, method: &str) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
    }

    /// Aligned accuracy table, one row per method.
    pub fn table(&self) -> String {
        let width = self
            .results
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(6)
            .max("Method".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} (n = {}, dim = {}, seed = {})",
            self.experiment, self.dataset.samples, self.dataset.dimension, self.seeds.global
        );
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>4}", "Method", "Accuracy", "Std", "Dim");
        for r in &self.results {
            let folds = &r.cv.fold_accuracies;
            let mean = r.cv.mean_accuracy;
            let var = folds.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / folds.len().max(1) as f64;
            let _ = writeln!(
                out,
                "{:<width$}  {:>8.4}  {:>8.4}  {:>4}",
                r.label,
                mean,
                var.sqrt(),
                r.embedding_dim
            );
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "stopped early: {f}");
        }
        out
    }
}

struct Runner<'a> {
    data: &'a GraphSignalDataset,
    settings: &'a ExperimentSettings,
    seeds: SeedPlan,
    report: EvaluationReport,
    timings: Vec<StageTiming>,
}

impl<'a> Runner<'a> {
    fn new(experiment: &str, data: &'a GraphSignalDataset, settings: &'a ExperimentSettings, seed: u64) -> Self {
        let seeds = SeedPlan::from_global(seed);
        Runner {
            data,
            settings,
            seeds,
            report: EvaluationReport {
                toolkit: TOOLKIT_NAME.into(),
                version: TOOLKIT_VERSION.into(),
                experiment: experiment.into(),
                seeds,
                settings: settings.clone(),
                dataset: DatasetSummary::of(data),
                results: Vec::new(),
                failure: None,
            },
            timings: Vec::new(),
        }
    }

    /// Runs one stage; numerical failures end the run with partial results,
    /// other errors propagate.
    fn stage(
        &mut self,
        key: &str,
        label: &str,
        embed: impl FnOnce() -> Result<(Array2<f64>, Option<f64>)>,
    ) -> Result<bool> {
        let start = Instant::now();
        let outcome = embed().and_then(|(features, loss)| {
            let cv = kfold_evaluate(
                features.view(),
                self.data.labels(),
                self.settings.folds,
                &self.settings.svm,
                self.seeds.cv,
            )?;
            Ok(MethodResult {
                method: key.into(),
                label: label.into(),
                embedding_dim: features.ncols(),
                cv,
                final_train_loss: loss,
            })
        });
        self.timings.push(StageTiming {
            stage: key.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        match outcome {
            Ok(r) => {
                log::info!("{key}: accuracy {:.4}", r.cv.mean_accuracy);
                self.report.results.push(r);
                Ok(true)
            }
            Err(e) if e.kind() == ErrorKind::Numerical => {
                self.report.failure = Some(format!("{key}: {e}"));
                Err(e)
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self, error: Option<Error>) -> RunOutput {
        RunOutput {
            report: self.report,
            timings: self.timings,
            error,
        }
    }
}

fn components(settings: &ExperimentSettings, data: &GraphSignalDataset) -> usize {
    settings.components.min(data.len()).min(data.dim()).max(1)
}

/// Trains an autoencoder on every sample (labels unused) and returns the
/// bottleneck embedding of each.
pub fn autoencoder_embedding(
    config: GcaeConfig,
    a_tilde: Array2<f64>,
    data: &GraphSignalDataset,
) -> Result<(Array2<f64>, Option<f64>)> {
    let mut model = GcaeModel::build(config, a_tilde)?;
    let report = model.train(data)?;
    Ok((model.embed_matrix(data.features().view(), false)?, report.final_loss))
}

fn check_graph(graph: &Graph, data: &GraphSignalDataset) -> Result<()> {
    if graph.n() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: graph.n(),
        });
    }
    Ok(())
}

/// Embeds `data` with each method in `methods` and scores it.
pub fn run_compare(
    data: &GraphSignalDataset,
    graph: &Graph,
    methods: &[Method],
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<RunOutput> {
    check_graph(graph, data)?;
    let mut runner = Runner::new("compare", data, settings, seed);
    let n = data.dim();
    let k = components(settings, data);
    let x = data.features().view();
    let model_seed = runner.seeds.model;
    for &method in methods {
        let embed = || -> Result<(Array2<f64>, Option<f64>)> {
            match method {
                Method::Raw => Ok((x.to_owned(), None)),
                Method::Pca => Ok((pca_fit_transform(x, k)?.1, None)),
                Method::Rpca => {
                    let opts = RpcaOptions {
                        tol: settings.rpca_tol,
                        max_iter: settings.rpca_max_iter,
                        ..RpcaOptions::default()
                    };
                    let low_rank = rpca_decompose(x, &opts)?.into_converged()?.low_rank;
                    Ok((pca_fit_transform(low_rank.view(), k)?.1, None))
                }
                Method::Gbf => {
                    let basis = gbf_basis(graph, settings.gbf_laplacian)?;
                    Ok((gbf_transform(&basis, x, k)?, None))
                }
                Method::Sae2 => autoencoder_embedding(settings.scale.sae2_config(n, model_seed), Array2::eye(n), data),
                Method::Sae4 => autoencoder_embedding(settings.scale.sae4_config(n, model_seed), Array2::eye(n), data),
                Method::Gcae => autoencoder_embedding(
                    settings.scale.gcae_config(n, model_seed),
                    graph.renormalized_adjacency(),
                    data,
                ),
            }
        };
        if let Err(e) = runner.stage(method.key(), method.label(), embed) {
            if e.kind() == ErrorKind::Numerical {
                return Ok(runner.finish(Some(e)));
            }
            return Err(e);
        }
    }
    Ok(runner.finish(None))
}

/// Trains the proposed model once per ablation, swapping the graph for an
/// empty or random one, or the graph-convolution activation for the
/// identity.
pub fn run_ablation(
    data: &GraphSignalDataset,
    graph: &Graph,
    ablations: &[Ablation],
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<RunOutput> {
    check_graph(graph, data)?;
    let mut runner = Runner::new("ablate", data, settings, seed);
    let n = data.dim();
    let seeds = runner.seeds;
    for &ablation in ablations {
        let key = ablation.key();
        let embed = || {
            let g = match ablation.graph {
                GraphChoice::Estimated => graph.clone(),
                GraphChoice::Identity => ablation_graph(AblationGraph::Identity, n, seeds.random_graph),
                GraphChoice::Random => ablation_graph(AblationGraph::RandomSymmetric, n, seeds.random_graph),
            };
            let mut config = settings.scale.gcae_config(n, seeds.model);
            if ablation.activation == ActivationChoice::Linear {
                config.conv_activation = Activation::Identity;
            }
            autoencoder_embedding(config, g.renormalized_adjacency(), data)
        };
        if let Err(e) = runner.stage(&key, &key, embed) {
            if e.kind() == ErrorKind::Numerical {
                return Ok(runner.finish(Some(e)));
            }
            return Err(e);
        }
    }
    Ok(runner.finish(None))
}

/// Several reports gathered into one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub toolkit: String,
    pub version: String,
    pub reports: Vec<EvaluationReport>,
}

impl MergedReport {
    pub fn new(reports: Vec<EvaluationReport>) -> Self {
        MergedReport {
            toolkit: TOOLKIT_NAME.into(),
            version: TOOLKIT_VERSION.into(),
            reports,
        }
    }

    pub fn table(&self) -> String {
        self.reports.iter().map(EvaluationReport::table).collect::<Vec<_>>().join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;
    use crate::synth::{generate_dataset, SynthSpec};

    fn tiny() -> (Graph, GraphSignalDataset, ExperimentSettings) {
        let g = generate::geometric(12, 3, 0);
        let spec = SynthSpec {
            per_class: (20, 20),
            smooth_band: 3,
            class_separation: 0.5,
            ..SynthSpec::default()
        };
        let data = generate_dataset(&g, &spec).unwrap();
        let settings = ExperimentSettings {
            scale: ModelScale {
                graph_conv_channels: vec![3, 2],
                hidden: 16,
                bottleneck: 4,
                sae2_hidden: 16,
                sae4_hidden: vec![16, 8, 8],
                epochs: 3,
                ..ModelScale::desk()
            },
            components: 4,
            folds: 5,
            svm: SvmParams {
                epochs: 10,
                ..SvmParams::default()
            },
            ..ExperimentSettings::default()
        };
        (g, data, settings)
    }

    #[test]
    fn seed_plan_offsets() {
        let s = SeedPlan::from_global(7);
        assert_eq!((s.model, s.random_graph, s.cv), (1007, 2007, 3007));
    }

    #[test]
    fn scale_configs_are_valid() {
        for scale in [ModelScale::full(), ModelScale::desk()] {
            for n in [64, 306] {
                for cfg in [scale.gcae_config(n, 0), scale.sae2_config(n, 0), scale.sae4_config(n, 0)] {
                    cfg.validate(n).unwrap();
                    assert_eq!(cfg.bottleneck_dim(), Some(50));
                }
            }
        }
        let sae4 = ModelScale::full().sae4_config(306, 0);
        assert_eq!(sae4.dense_dims, vec![5000, 1500, 2000, 50, 2000, 1500, 5000, 306]);
        assert_eq!(ModelScale::full().sae2_config(306, 0).dense_dims, vec![2000, 50, 2000, 306]);
    }

    #[test]
    fn method_keys_roundtrip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.key()), Some(m));
        }
        assert_eq!(Method::parse("svm"), None);
    }

    #[test]
    fn compare_lists_requested_methods_once() {
        let (g, data, settings) = tiny();
        let out = run_compare(&data, &g, &Method::ALL, &settings, 1).unwrap();
        assert!(out.error.is_none());
        let keys: Vec<&str> = out.report.results.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(keys, ["raw", "pca", "rpca", "gbf", "sae2", "sae4", "gcae"]);
        assert_eq!(out.report.result("raw").unwrap().embedding_dim, 12);
        assert_eq!(out.report.result("gcae").unwrap().embedding_dim, 4);
        assert!(out.report.table().contains("Robust PCA"));
        let again = run_compare(&data, &g, &Method::ALL, &settings, 1).unwrap();
        assert_eq!(again.report.to_json().unwrap(), out.report.to_json().unwrap());
    }

    #[test]
    fn ablation_runs_each_variant() {
        let (g, data, settings) = tiny();
        let ablations = [
            Ablation::BASELINE,
            Ablation {
                graph: GraphChoice::Random,
                activation: ActivationChoice::Linear,
            },
        ];
        let out = run_ablation(&data, &g, &ablations, &settings, 2).unwrap();
        assert_eq!(out.report.results.len(), 2);
        assert_eq!(out.report.results[1].method, "graph=random,activation=linear");
    }

    #[test]
    fn numerical_failure_keeps_partial_results() {
        let (g, data, mut settings) = tiny();
        settings.scale.learning_rate = 1e6;
        settings.scale.epochs = 30;
        let out = run_compare(&data, &g, &[Method::Raw, Method::Gcae, Method::Pca], &settings, 3).unwrap();
        assert!(matches!(out.error, Some(Error::NonfiniteLoss { .. })));
        assert_eq!(out.report.results.len(), 1);
        assert!(out.report.failure.as_deref().unwrap().starts_with("gcae"));
    }

    #[test]
    fn graph_must_match_dataset() {
        let (_, data, settings) = tiny();
        let g = generate::geometric(5, 2, 0);
        assert!(run_compare(&data, &g, &[Method::Raw], &settings, 0).is_err());
    }
}
