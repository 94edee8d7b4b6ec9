//! Command-line front end. Every subcommand is deterministic given `--seed`
//! and never writes to its input files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use crate::baselines::LaplacianKind;
use crate::connectivity::{self, granger_influence, influence_to_graph, TimeSeriesPanel};
use crate::error::{Error, ErrorKind, Result};
use crate::experiment::{
    run_ablation, run_compare, Ablation, ActivationChoice, EvaluationReport, ExperimentSettings, GraphChoice,
    MergedReport, Method, ModelScale, RunOutput, SeedPlan,
};
use crate::graph::io::{read_matrix_csv, write_matrix_csv};
use crate::graph::{generate, Graph};
use crate::model::GcaeModel;
use crate::nn::Activation;
use crate::synth::{generate_dataset, write_labelled_csv, GraphSignalDataset, NoiseSpec, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gcae", version, about = "Graph-convolutional autoencoders for graph-signal representation learning")]
struct Cli {
    /// Log progress to the error stream.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random connected graph and write its adjacency as CSV.
    GenGraph(GenGraphArgs),
    /// Generate a labelled synthetic dataset of graph signals.
    GenData(GenDataArgs),
    /// Estimate a feature graph from a channels × timepoints CSV panel.
    EstimateGraph(EstimateGraphArgs),
    /// Train an autoencoder and write a checkpoint.
    Train(TrainArgs),
    /// Embed a dataset with a trained checkpoint.
    Embed(EmbedArgs),
    /// Compare embeddings by cross-validated linear SVM accuracy.
    Compare(CompareArgs),
    /// Replace the graph or the nonlinearity of the proposed model.
    Ablate(AblateArgs),
    /// Merge saved reports into one document.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphKind {
    Geometric,
    Random,
    StochasticBlock,
}

#[derive(Debug, Args)]
struct GenGraphArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "geometric")]
    kind: GraphKind,
    /// Neighbours per vertex for geometric graphs.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Extra edge probability for random graphs.
    #[arg(long, default_value_t = 0.1)]
    edge_prob: f64,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = 0.5)]
    p_in: f64,
    #[arg(long, default_value_t = 0.02)]
    p_out: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    /// Adjacency CSV; when absent a geometric graph on `--n` vertices is drawn
    /// from the seed.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, required_unless_present = "graph")]
    n: Option<usize>,
    /// Samples per class, or `POS/NEG`.
    #[arg(long, default_value = "250")]
    per_class: String,
    #[arg(long, default_value_t = 8)]
    smooth_band: usize,
    #[arg(long, default_value_t = 0.3)]
    gaussian_sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    spike_prob: f64,
    #[arg(long, default_value_t = 5.0)]
    spike_scale: f64,
    #[arg(long, default_value_t = 0.2)]
    class_separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the generating graph's adjacency here.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateGraphArgs {
    /// CSV with one row per channel and one column per timepoint.
    #[arg(long)]
    panel: PathBuf,
    #[arg(long, default_value_t = connectivity::DEFAULT_ORDER)]
    order: usize,
    #[arg(long, default_value_t = connectivity::DEFAULT_DENSITY)]
    density: f64,
    /// Split the time axis into consecutive trials of this length.
    #[arg(long)]
    trial_length: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    influence_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    /// Preset layer widths: `desk` for small graphs, `full` for the
    /// 2000-wide layers.
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScalePreset,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Hidden width on each side of the bottleneck.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    bottleneck: Option<usize>,
    /// Graph-convolution channels, e.g. `16,5`; `none` or an empty value
    /// disables them.
    #[arg(long, value_parser = parse_channels)]
    channels: Option<Channels>,
}

#[derive(Debug, Clone)]
struct Channels(Vec<usize>);

fn parse_channels(s: &str) -> std::result::Result<Channels, String> {
    let s = s.trim();
    if s.is_empty() || s == "none" {
        return Ok(Channels(Vec::new()));
    }
    s.split(',')
        .map(|c| c.trim().parse::<usize>().map_err(|e| format!("{c:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Channels)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScalePreset {
    Desk,
    Full,
}

impl ScaleArgs {
    fn resolve(&self) -> ModelScale {
        let mut s = match self.scale {
            ScalePreset::Desk => ModelScale::desk(),
            ScalePreset::Full => ModelScale::full(),
        };
        if let Some(v) = self.epochs {
            s.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            s.learning_rate = v;
        }
        if let Some(v) = self.dropout {
            s.dropout_rate = v;
        }
        if let Some(v) = self.l2 {
            s.l2_lambda = v;
        }
        if let Some(v) = self.batch_size {
            s.batch_size = v;
        }
        if let Some(v) = self.hidden {
            s.hidden = v;
            s.sae2_hidden = v;
        }
        if let Some(v) = self.bottleneck {
            s.bottleneck = v;
        }
        if let Some(v) = &self.channels {
            s.graph_conv_channels = v.0.clone();
        }
        s
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Adjacency CSV; without it the graph convolutions see no edges.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    scale: ScaleArgs,
    /// Identity activation in the graph convolutions.
    #[arg(long)]
    linear: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Training report (loss trajectory) path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Permit embedding with an untrained checkpoint.
    #[arg(long)]
    allow_untrained: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    scale: ScaleArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 1.0)]
    svm_c: f64,
    #[arg(long, default_value_t = 100)]
    svm_epochs: usize,
    /// Skip per-fold standardization before the SVM.
    #[arg(long)]
    no_standardize: bool,
    /// Components kept by the linear baselines.
    #[arg(long, default_value_t = 50)]
    components: usize,
    #[arg(long, value_enum, default_value = "normalized")]
    gbf_laplacian: LaplacianKind,
    /// Machine-readable report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-stage wall-clock timings path.
    #[arg(long)]
    timings: Option<PathBuf>,
}

impl EvalArgs {
    fn settings(&self) -> ExperimentSettings {
        let mut s = ExperimentSettings {
            scale: self.scale.resolve(),
            components: self.components,
            folds: self.folds,
            gbf_laplacian: self.gbf_laplacian,
            ..ExperimentSettings::default()
        };
        s.svm.c = self.svm_c;
        s.svm.epochs = self.svm_epochs;
        s.svm.standardize = !self.no_standardize;
        s
    }
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "raw,pca,rpca,gbf,sae2,sae4,gcae")]
    methods: Vec<Method>,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long = "graphs", value_enum, value_delimiter = ',', default_value = "estimated,identity,random")]
    graphs: Vec<GraphChoice>,
    #[arg(long = "activations", value_enum, value_delimiter = ',', default_value = "nonlinear,linear")]
    activations: Vec<ActivationChoice>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if cli.verbose {
        let _ = env_logger::Builder::new()
            .filter_level(log::LevelFilter::Info)
            .try_init();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Input => EXIT_INPUT,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::GenGraph(a) => gen_graph(a),
        Command::GenData(a) => gen_data(a),
        Command::EstimateGraph(a) => estimate_graph(a),
        Command::Train(a) => train(a),
        Command::Embed(a) => embed(a),
        Command::Compare(a) => compare(a),
        Command::Ablate(a) => ablate(a),
        Command::Report(a) => report(a),
    }
}

/// Refuses to write over any of the inputs.
fn guard_outputs(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    for out in outputs {
        for input in inputs {
            let same = match (input.canonicalize(), out.canonicalize()) {
                (Ok(a), Ok(b)) => a == b,
                _ => input == out,
            };
            if same {
                return Err(Error::InvalidConfig(format!(
                    "output {} would overwrite an input file",
                    out.display()
                )));
            }
        }
    }
    Ok(())
}

fn load_graph(path: &Path) -> Result<Graph> {
    let w = read_matrix_csv(path)?;
    Graph::new(w).map_err(|e| Error::malformed(path, e.to_string()))
}

fn gen_graph(a: GenGraphArgs) -> Result<i32> {
    if a.n == 0 {
        return Err(Error::InvalidConfig("--n must be positive".into()));
    }
    let g = match a.kind {
        GraphKind::Geometric => generate::geometric(a.n, a.k, a.seed),
        GraphKind::Random => generate::random_connected(a.n, a.edge_prob, a.seed),
        GraphKind::StochasticBlock => generate::stochastic_block(a.n, a.blocks, a.p_in, a.p_out, a.seed),
    };
    write_matrix_csv(&a.out, g.adjacency())?;
    println!("wrote {}-vertex graph with {} edges to {}", g.n(), g.edge_count(), a.out.display());
    Ok(EXIT_OK)
}

fn parse_per_class(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidConfig(format!("--per-class expects N or POS/NEG, got {s:?}"));
    match s.split_once('/') {
        Some((p, n)) => Ok((p.trim().parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?)),
        None => {
            let k = s.trim().parse().map_err(|_| bad())?;
            Ok((k, k))
        }
    }
}

fn gen_data(a: GenDataArgs) -> Result<i32> {
    let mut outputs = vec![a.out.as_path()];
    if let Some(p) = &a.graph_out {
        outputs.push(p);
    }
    if let Some(p) = &a.graph {
        guard_outputs(&[p], &outputs)?;
    }
    let g = match (&a.graph, a.n) {
        (Some(p), _) => load_graph(p)?,
        (None, Some(n)) if n > 0 => generate::geometric(n, 6, a.seed),
        _ => return Err(Error::InvalidConfig("--n must be positive".into())),
    };
    if let (Some(_), Some(n)) = (&a.graph, a.n) {
        if n != g.n() {
            return Err(Error::InvalidConfig(format!("--n {n} disagrees with the {}-vertex graph", g.n())));
        }
    }
    let spec = SynthSpec {
        per_class: parse_per_class(&a.per_class)?,
        smooth_band: a.smooth_band,
        noise: NoiseSpec {
            gaussian_sigma: a.gaussian_sigma,
            spike_prob: a.spike_prob,
            spike_scale: a.spike_scale,
        },
        class_separation: a.class_separation,
        seed: a.seed,
    };
    let data = generate_dataset(&g, &spec)?;
    data.write_csv(&a.out)?;
    if let Some(p) = &a.graph_out {
        write_matrix_csv(p, g.adjacency())?;
    }
    println!("wrote {} samples of dimension {} to {}", data.len(), data.dim(), a.out.display());
    Ok(EXIT_OK)
}

fn estimate_graph(a: EstimateGraphArgs) -> Result<i32> {
    let mut outputs = vec![a.out.as_path()];
    if let Some(p) = &a.influence_out {
        outputs.push(p);
    }
    guard_outputs(&[&a.panel], &outputs)?;
    let values = read_matrix_csv(&a.panel)?;
    let panel = match a.trial_length {
        Some(len) => TimeSeriesPanel::with_trial_length(values, len)?,
        None => TimeSeriesPanel::new(values)?,
    };
    let influence = granger_influence(&panel, a.order)?;
    let g = influence_to_graph(&influence, a.density)?;
    write_matrix_csv(&a.out, g.adjacency())?;
    if let Some(p) = &a.influence_out {
        write_matrix_csv(p, influence.values())?;
    }
    println!("estimated {}-vertex graph with {} edges", g.n(), g.edge_count());
    Ok(EXIT_OK)
}

fn train(a: TrainArgs) -> Result<i32> {
    let mut inputs = vec![a.dataset.as_path()];
    if let Some(p) = &a.graph {
        inputs.push(p);
    }
    let mut outputs = vec![a.out.as_path()];
    if let Some(p) = &a.report {
        outputs.push(p);
    }
    guard_outputs(&inputs, &outputs)?;
    let data = GraphSignalDataset::read_csv(&a.dataset)?;
    let a_tilde = match &a.graph {
        Some(p) => {
            let g = load_graph(p)?;
            if g.n() != data.dim() {
                return Err(Error::DimensionMismatch {
                    expected: data.dim(),
                    found: g.n(),
                });
            }
            g.renormalized_adjacency()
        }
        None => Array2::eye(data.dim()),
    };
    let seeds = SeedPlan::from_global(a.seed);
    let mut config = a.scale.resolve().gcae_config(data.dim(), seeds.model);
    if a.linear {
        config.conv_activation = Activation::Identity;
    }
    let mut model = GcaeModel::build(config, a_tilde)?;
    let report = model.train(&data)?;
    model.save(&a.out)?;
    if let Some(p) = &a.report {
        let text = serde_json::to_string_pretty(&report)? + "\n";
        std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    println!(
        "trained {} epochs in {:.1}s, final loss {}",
        report.epoch_losses.len(),
        report.seconds,
        report.final_loss.map_or("n/a".into(), |l| format!("{l:.6}"))
    );
    Ok(EXIT_OK)
}

fn embed(a: EmbedArgs) -> Result<i32> {
    guard_outputs(&[&a.checkpoint, &a.dataset], &[&a.out])?;
    let model = GcaeModel::load(&a.checkpoint)?;
    let data = GraphSignalDataset::read_csv(&a.dataset)?;
    if !model.is_trained() && a.allow_untrained {
        log::warn!("embedding with an untrained model");
    }
    let z = model.embed_matrix(data.features().view(), a.allow_untrained)?;
    write_labelled_csv(&a.out, &z, data.labels(), "z")?;
    println!("wrote {} embeddings of dimension {} to {}", z.nrows(), z.ncols(), a.out.display());
    Ok(EXIT_OK)
}

fn finish_run(out: RunOutput, eval: &EvalArgs) -> Result<i32> {
    print!("{}", out.report.table());
    if let Some(p) = &eval.out {
        out.report.write(p)?;
    }
    if let Some(p) = &eval.timings {
        let text = serde_json::to_string_pretty(&out.timings)? + "\n";
        std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    for t in &out.timings {
        log::info!("{}: {:.2}s", t.stage, t.seconds);
    }
    match out.error {
        Some(e) => {
            eprintln!("error: {e}");
            Ok(exit_code(&e))
        }
        None => Ok(EXIT_OK),
    }
}

fn load_eval_inputs(eval: &EvalArgs) -> Result<(GraphSignalDataset, Graph)> {
    let mut outputs = Vec::new();
    outputs.extend(eval.out.as_deref());
    outputs.extend(eval.timings.as_deref());
    guard_outputs(&[&eval.dataset, &eval.graph], &outputs)?;
    Ok((GraphSignalDataset::read_csv(&eval.dataset)?, load_graph(&eval.graph)?))
}

fn dedup<T: PartialEq + Copy>(items: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn compare(a: CompareArgs) -> Result<i32> {
    let (data, graph) = load_eval_inputs(&a.eval)?;
    let out = run_compare(&data, &graph, &dedup(&a.methods), &a.eval.settings(), a.eval.seed)?;
    finish_run(out, &a.eval)
}

fn ablate(a: AblateArgs) -> Result<i32> {
    let (data, graph) = load_eval_inputs(&a.eval)?;
    let mut ablations = Vec::new();
    for &activation in &dedup(&a.activations) {
        for &graph in &dedup(&a.graphs) {
            ablations.push(Ablation { graph, activation });
        }
    }
    let out = run_ablation(&data, &graph, &ablations, &a.eval.settings(), a.eval.seed)?;
    finish_run(out, &a.eval)
}

fn report(a: ReportArgs) -> Result<i32> {
    let inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
    guard_outputs(&inputs, &[&a.out])?;
    let reports = a
        .inputs
        .iter()
        .map(EvaluationReport::read)
        .collect::<Result<Vec<_>>>()?;
    let merged = MergedReport::new(reports);
    let text = serde_json::to_string_pretty(&merged)? + "\n";
    std::fs::write(&a.out, text).map_err(|e| Error::io(&a.out, e))?;
    print!("{}", merged.table());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_class_forms() {
        assert_eq!(parse_per_class("250").unwrap(), (250, 250));
        assert_eq!(parse_per_class("10/30").unwrap(), (10, 30));
        assert!(parse_per_class("ten").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_command(["gcae", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run_command(["gcae", "gen-graph", "--n"]), EXIT_USAGE);
        assert_eq!(run_command(["gcae", "--help"]), EXIT_OK);
    }

    #[test]
    fn scale_overrides_apply() {
        let cli = Cli::try_parse_from([
            "gcae", "train", "--dataset", "d.csv", "--out", "c.json", "--epochs", "7", "--channels", "",
        ])
        .unwrap();
        let Command::Train(a) = cli.command else { panic!() };
        let s = a.scale.resolve();
        assert_eq!(s.epochs, 7);
        assert!(s.graph_conv_channels.is_empty());
    }
}
