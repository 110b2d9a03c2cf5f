//! The `topoembed` command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use topoembed_core::manifolds::{sample_figure8, sample_torus, ManifoldKind, TORUS_MAJOR, TORUS_MINOR};
use topoembed_core::metrics::{knn_accuracy, knn_preservation, trustworthiness, SplitSpec};
use topoembed_core::pipeline::{initialize, prepare, refine};
use topoembed_core::search::{Nsga2Config, Objectives};
use topoembed_core::topology::{
    betti_curve, island_metrics, rips_persistence, significant_bars, RipsOptions, DEFAULT_GRID_SIZE, SIGNIFICANCE,
};
use topoembed_core::{EmbedConfig, Embedding, InitKind, PointCloud, Points, UpdateMode};

use crate::diagram::{betti_from_csv, betti_to_csv, diagram_to_json};
use crate::error::{Result, TopoError};
use crate::io::{load_labels, load_matrix, save_matrix, write_text, CsvOptions, Format};
use crate::manifest::{config_json, RunManifest};
use crate::study::{run_study, StudySpec};
use crate::sweep::{noise_sweep, sweep_csv, sweep_svg, SweepSpec, DEFAULT_SIGMAS};
use crate::svg::{betti_svg, scatter_svg};

#[derive(Debug, Parser)]
#[command(name = "topoembed", version, about = "Force-directed embedding with topology-faithfulness evaluation")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TOPOEMBED_THREADS")]
    pub threads: Option<usize>,
    /// Print the resolved configuration and exit without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Where to write the run manifest (default: next to the output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize, build the kNN graph, initialize and refine a layout.
    Embed(EmbedArgs),
    /// Sample a stress manifold.
    Stress(StressArgs),
    /// Rips persistence diagram and Betti curves of a point set.
    Betti(BettiArgs),
    /// kNN accuracy, trustworthiness and kNN preservation of an embedding.
    Eval(EvalArgs),
    /// Significant H1 counts on the figure-8 across noise levels.
    NoiseSweep(SweepArgs),
    /// NSGA-II study of kNN accuracy against topology error.
    Pareto(ParetoArgs),
    /// SVG scatter plot or Betti-curve figure.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Npy,
    Raw,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Npy => Format::Npy,
            FormatArg::Raw => Format::RawF32,
        }
    }
}

/// `last-col` or a path to a one-column label file.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelsArg {
    LastCol,
    File(PathBuf),
}

fn parse_labels(s: &str) -> std::result::Result<LabelsArg, String> {
    Ok(if s == "last-col" { LabelsArg::LastCol } else { LabelsArg::File(s.into()) })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    TopologyTuned,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Pca,
    Spectral,
    Diffusion,
    Jl,
}

impl From<InitArg> for InitKind {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Pca => InitKind::Pca,
            InitArg::Spectral => InitKind::Spectral,
            InitArg::Diffusion => InitKind::Diffusion,
            InitArg::Jl => InitKind::Jl,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Sequential,
    Synchronous,
}

/// Input matrix options shared by the commands that read points.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input matrix (CSV, NPY or raw f32).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// `last-col` or a label file.
    #[arg(long, value_parser = parse_labels)]
    pub labels: Option<LabelsArg>,
    /// The CSV has a header line.
    #[arg(long)]
    pub header: bool,
}

/// Embedding hyperparameters; explicit flags override the preset.
#[derive(Debug, Args, Clone)]
pub struct EmbedParams {
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub min_dist: Option<f64>,
    #[arg(long)]
    pub neg_ratio: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Layout update style (default: sequential with one thread,
    /// synchronous otherwise).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: EmbedParams,
    /// Output embedding (CSV or NPY by extension).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ManifoldArg {
    Figure8,
    Torus,
}

#[derive(Debug, Args)]
pub struct StressArgs {
    #[arg(long, value_enum)]
    pub manifold: ManifoldArg,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = TORUS_MAJOR)]
    pub major: f64,
    #[arg(long, default_value_t = TORUS_MINOR)]
    pub minor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BettiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1)]
    pub maxdim: usize,
    /// Filtration cut-off (default: enclosing radius).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    /// Diagram JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Betti curves CSV.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub orig: PathBuf,
    #[arg(long)]
    pub embed: PathBuf,
    /// Labels of the original points: `last-col` (of --orig) or a file.
    #[arg(long, value_parser = parse_labels)]
    pub labels: Option<LabelsArg>,
    /// The embedding file carries a trailing label column to ignore.
    #[arg(long)]
    pub embed_has_labels: bool,
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    /// Seed of the train/test split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIGMAS.to_vec())]
    pub sigmas: Vec<f64>,
    /// Also run the noiseless manifold.
    #[arg(long)]
    pub include_clean: bool,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[command(flatten)]
    pub params: EmbedParams,
    /// Table CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_parser = parse_labels)]
    pub labels: LabelsArg,
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = 150)]
    pub trials: usize,
    #[arg(long, default_value_t = 25)]
    pub pop: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, requires = "reference_te")]
    pub reference_acc: Option<f64>,
    #[arg(long, requires = "reference_acc")]
    pub reference_te: Option<f64>,
    /// Points per stress manifold.
    #[arg(long, default_value_t = 1000)]
    pub stress_n: usize,
    /// Neighbors of the accuracy classifier.
    #[arg(long, default_value_t = 15)]
    pub eval_k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlotKind {
    Scatter,
    Betti,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Embedding matrix (scatter) or Betti-curve CSV (betti).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_parser = parse_labels)]
    pub labels: Option<LabelsArg>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

/// An error tagged with the stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: TopoError,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T, E: Into<TopoError>> Stage<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|e| StageError { stage, error: e.into() })
    }
}

type Run = std::result::Result<(), StageError>;

fn resolve_threads(t: Option<usize>) -> usize {
    t.filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Config from the preset (or defaults) with explicit flags on top.
pub fn resolve_config(p: &EmbedParams, threads: usize) -> EmbedConfig {
    let mut c = match p.preset {
        Some(PresetArg::TopologyTuned) => EmbedConfig::topology_tuned(),
        None => EmbedConfig::default(),
    };
    if let Some(i) = p.init {
        c.init = i.into();
    }
    if let Some(v) = p.k {
        c.layout.n_neighbors = v;
    }
    if let Some(v) = p.spread {
        c.spread = v;
    }
    if let Some(v) = p.min_dist {
        c.min_dist = v;
    }
    if let Some(v) = p.neg_ratio {
        c.layout.neg_ratio = v;
    }
    if let Some(v) = p.iters {
        c.layout.max_iter = v;
    }
    if let Some(v) = p.cutoff {
        c.layout.cutoff = v;
    }
    if let Some(v) = p.dim {
        c.dim = v;
    }
    if let Some(v) = p.lr {
        c.layout.lr_initial = v;
    }
    c.layout.mode = match p.mode {
        Some(ModeArg::Sequential) => UpdateMode::Sequential,
        Some(ModeArg::Synchronous) => UpdateMode::Synchronous,
        None if threads > 1 => UpdateMode::Synchronous,
        None => UpdateMode::Sequential,
    };
    c.with_seed(p.seed)
}

fn csv_opts(labels: &Option<LabelsArg>, header: bool) -> CsvOptions {
    CsvOptions {
        labels_last: labels == &Some(LabelsArg::LastCol),
        header,
    }
}

/// Load points, attaching labels from the last column or a label file.
fn load_points(path: &Path, format: Option<FormatArg>, labels: &Option<LabelsArg>, header: bool) -> Result<PointCloud> {
    let cloud = load_matrix(path, format.map(Into::into), &csv_opts(labels, header))?;
    match labels {
        Some(LabelsArg::LastCol) if cloud.labels().is_none() => {
            Err(TopoError::Usage("--labels last-col is only supported for CSV input".into()))
        }
        Some(LabelsArg::File(f)) => Ok(cloud.with_labels(load_labels(f)?)?),
        _ => Ok(cloud),
    }
}

fn default_manifest(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

struct Ctx<'a> {
    argv: &'a [String],
    threads: usize,
    dry_run: bool,
    manifest: Option<PathBuf>,
}

impl Ctx<'_> {
    fn manifest(&self, command: &str, config: Value, seed: u64) -> RunManifest {
        RunManifest::new(command, self.argv, config, seed, self.threads)
    }

    /// In dry-run mode print the manifest and report `true`.
    fn dry(&self, m: &RunManifest) -> bool {
        if self.dry_run {
            println!("{}", serde_json::to_string_pretty(&m.to_json()).unwrap());
        }
        self.dry_run
    }

    fn finish(&self, m: &RunManifest, out: Option<&Path>) -> Run {
        match self.manifest.clone().or_else(|| out.map(default_manifest)) {
            Some(p) => m.write(&p).stage("manifest"),
            None => {
                eprintln!("{}", serde_json::to_string_pretty(&m.to_json()).unwrap());
                Ok(())
            }
        }
    }
}

fn cmd_embed(ctx: &Ctx, a: &EmbedArgs) -> Run {
    let cfg = resolve_config(&a.params, ctx.threads);
    let mut m = ctx.manifest("embed", config_json(&cfg), cfg.seed());
    if ctx.dry(&m) {
        return Ok(());
    }
    let cloud = m.time("load", || load_points(&a.input.input, a.input.format, &a.input.labels, a.input.header)).stage("load")?;
    let kernel = m.time("kernel", || cfg.kernel()).stage("kernel")?;
    m.config["kernel"] = json!({ "a": kernel.a, "b": kernel.b });
    let prep = m.time("knn", || prepare(&cloud, cfg.layout.n_neighbors)).stage("knn")?;
    let init = m.time("init", || initialize(&prep, &cfg)).stage("init")?;
    let emb = m.time("layout", || refine(&init, &prep, &cfg)).stage("layout")?;
    let labels = cloud.labels().filter(|_| Format::from_path(&a.out) == Some(Format::Csv));
    m.time("write", || save_matrix(&a.out, None, &emb, labels)).stage("write")?;
    ctx.finish(&m, Some(&a.out))
}

fn cmd_stress(ctx: &Ctx, a: &StressArgs) -> Run {
    let kind = match a.manifold {
        ManifoldArg::Figure8 => ManifoldKind::Figure8,
        ManifoldArg::Torus => ManifoldKind::Torus,
    };
    let config = json!({ "manifold": kind.name(), "n": a.n, "sigma": a.sigma, "seed": a.seed, "major": a.major, "minor": a.minor });
    let mut m = ctx.manifest("stress", config, a.seed);
    if ctx.dry(&m) {
        return Ok(());
    }
    let cloud = m
        .time("sample", || match kind {
            ManifoldKind::Figure8 => sample_figure8(a.n, a.sigma, a.seed),
            ManifoldKind::Torus => sample_torus(a.n, a.major, a.minor, a.sigma, a.seed),
        })
        .stage("sample")?;
    m.time("write", || save_matrix(&a.out, None, &cloud, None)).stage("write")?;
    ctx.finish(&m, Some(&a.out))
}

fn cmd_betti(ctx: &Ctx, a: &BettiArgs) -> Run {
    let opts = RipsOptions {
        maxdim: a.maxdim,
        threshold: a.threshold,
        ..RipsOptions::default()
    };
    let config = json!({ "maxdim": a.maxdim, "threshold": a.threshold, "grid": a.grid, "significance": SIGNIFICANCE });
    let mut m = ctx.manifest("betti", config, 0);
    if ctx.dry(&m) {
        return Ok(());
    }
    let cloud = m.time("load", || load_points(&a.input.input, a.input.format, &a.input.labels, a.input.header)).stage("load")?;
    let dgm = m.time("persistence", || rips_persistence(&cloud, &opts)).stage("persistence")?;
    let text = serde_json::to_string_pretty(&diagram_to_json(&dgm)).unwrap() + "\n";
    write_text(&a.out, &text).stage("write")?;
    let mut curves = Vec::new();
    for dim in 0..=a.maxdim {
        curves.push(betti_curve(&dgm, dim, a.grid).stage("betti")?);
    }
    if let Some(p) = &a.curves {
        write_text(p, &betti_to_csv(&curves)).stage("write")?;
    }
    let mut summary = json!({
        "significant": (0..=a.maxdim).map(|d| significant_bars(&dgm, d, SIGNIFICANCE)).collect::<Vec<_>>(),
        "threshold": dgm.threshold,
    });
    if let Ok(isl) = island_metrics(&dgm) {
        summary["longest_h0_bar"] = json!(isl.longest_h0_bar);
        summary["top5_over_median"] = json!(isl.top5_over_median);
    }
    println!("{summary}");
    ctx.finish(&m, Some(&a.out))
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> Run {
    let config = json!({ "k": a.k, "split_seed": a.seed });
    let mut m = ctx.manifest("eval", config, a.seed);
    if ctx.dry(&m) {
        return Ok(());
    }
    let orig = m.time("load", || load_points(&a.orig, None, &a.labels, false)).stage("load")?;
    let emb_opts = if a.embed_has_labels { Some(LabelsArg::LastCol) } else { None };
    let emb = m.time("load", || load_points(&a.embed, None, &emb_opts, false)).stage("load")?;
    if emb.n() != orig.n() {
        return Err(TopoError::Usage(format!("{} original points but {} embedded", orig.n(), emb.n()))).stage("load");
    }
    let split = SplitSpec { seed: a.seed, ..SplitSpec::default() };
    let (acc, tw, kp) = m
        .time("metrics", || -> topoembed_core::Result<_> {
            let acc = match orig.labels() {
                Some(l) => Some(knn_accuracy(&emb, l, a.k, &split)?),
                None => None,
            };
            Ok((acc, trustworthiness(&orig, &emb, a.k)?, knn_preservation(&orig, &emb, a.k)?))
        })
        .stage("metrics")?;
    let out = json!({ "accuracy": acc, "trustworthiness": tw, "knn_preservation": kp });
    match &a.out {
        Some(p) => write_text(p, &(serde_json::to_string_pretty(&out).unwrap() + "\n")).stage("write")?,
        None => println!("{out}"),
    }
    ctx.finish(&m, a.out.as_deref())
}

fn cmd_sweep(ctx: &Ctx, a: &SweepArgs) -> Run {
    let mut params = a.params.clone();
    params.preset = params.preset.or(Some(PresetArg::TopologyTuned));
    let cfg = resolve_config(&params, ctx.threads);
    let mut sigmas = a.sigmas.clone();
    if a.include_clean && !sigmas.contains(&0.0) {
        sigmas.insert(0, 0.0);
    }
    let spec = SweepSpec { sigmas, seeds: a.seeds, n_points: a.n, config: cfg.clone() };
    let mut config = config_json(&cfg);
    config["sigmas"] = json!(spec.sigmas);
    config["seeds"] = json!(spec.seeds);
    config["n"] = json!(spec.n_points);
    let mut m = ctx.manifest("noise-sweep", config, cfg.seed());
    if ctx.dry(&m) {
        return Ok(());
    }
    let rows = m.time("sweep", || noise_sweep(&spec)).stage("sweep")?;
    write_text(&a.out, &sweep_csv(&rows)).stage("write")?;
    if let Some(p) = &a.svg {
        write_text(p, &sweep_svg(&rows)).stage("write")?;
    }
    m.config["per_seed"] = serde_json::to_value(&rows).unwrap();
    ctx.finish(&m, Some(&a.out))
}

fn cmd_pareto(ctx: &Ctx, a: &ParetoArgs) -> Run {
    let spec = StudySpec {
        nsga: Nsga2Config {
            pop_size: a.pop,
            n_trials: a.trials,
            seed: a.seed,
            ..Nsga2Config::default()
        },
        stress_points: a.stress_n,
        eval_k: a.eval_k,
        reference: a.reference_acc.zip(a.reference_te).map(|(acc, te)| Objectives { acc, te }),
    };
    let config = json!({
        "trials": a.trials, "population": a.pop, "stress_n": a.stress_n, "eval_k": a.eval_k,
        "reference": spec.reference.map(|r| json!({ "acc": r.acc, "te": r.te })),
    });
    let mut m = ctx.manifest("pareto", config, a.seed);
    if ctx.dry(&m) {
        return Ok(());
    }
    let labels = Some(a.labels.clone());
    let data = m.time("load", || load_points(&a.data, a.format, &labels, a.header)).stage("load")?;
    let report = m.time("study", || run_study(&data, &spec)).stage("study")?;
    let text = serde_json::to_string_pretty(&report.to_json(&spec)).unwrap() + "\n";
    write_text(&a.out, &text).stage("write")?;
    let best = report.best_topology();
    println!(
        "{}",
        json!({
            "trials": report.trials.len(),
            "failed": report.trials.iter().filter(|t| !t.ok).count(),
            "front": report.front.len(),
            "best_te": best.map(|t| t.objectives.te),
            "best_te_acc": best.map(|t| t.objectives.acc),
            "dominated_by": report.dominated_by,
        })
    );
    ctx.finish(&m, Some(&a.out))
}

fn cmd_plot(ctx: &Ctx, a: &PlotArgs) -> Run {
    let config = json!({ "kind": format!("{:?}", a.kind).to_lowercase() });
    let mut m = ctx.manifest("plot", config, 0);
    if ctx.dry(&m) {
        return Ok(());
    }
    let title = a.title.clone().unwrap_or_else(|| a.input.display().to_string());
    let svg = match a.kind {
        PlotKind::Scatter => {
            let cloud = m.time("load", || load_points(&a.input, a.format, &a.labels, false)).stage("load")?;
            let emb = as_embedding(&cloud).stage("load")?;
            scatter_svg(&emb, cloud.labels(), &title).stage("plot")?
        }
        PlotKind::Betti => {
            let text = std::fs::read_to_string(&a.input).map_err(|e| TopoError::io(&a.input, e)).stage("load")?;
            let curves = betti_from_csv(&text)
                .map_err(|msg| TopoError::format(&a.input, None, None, msg))
                .stage("load")?;
            betti_svg(&curves, &title).stage("plot")?
        }
    };
    write_text(&a.out, &svg).stage("write")?;
    ctx.finish(&m, Some(&a.out))
}

fn as_embedding(c: &PointCloud) -> topoembed_core::Result<Embedding> {
    Embedding::new(c.data().to_vec(), c.n(), c.dim())
}

fn dispatch(cli: &Cli, argv: &[String]) -> Run {
    let ctx = Ctx {
        argv,
        threads: resolve_threads(cli.threads),
        dry_run: cli.dry_run,
        manifest: cli.manifest.clone(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build()
        .map_err(|e| TopoError::Usage(e.to_string()))
        .stage("threads")?;
    pool.install(|| match &cli.command {
        Command::Embed(a) => cmd_embed(&ctx, a),
        Command::Stress(a) => cmd_stress(&ctx, a),
        Command::Betti(a) => cmd_betti(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::NoiseSweep(a) => cmd_sweep(&ctx, a),
        Command::Pareto(a) => cmd_pareto(&ctx, a),
        Command::Plot(a) => cmd_plot(&ctx, a),
    })
}

/// Parse `argv`, run, report errors on stderr and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    match dispatch(&cli, &argv) {
        Ok(()) => 0,
        Err(StageError { stage, error }) => {
            eprintln!("error [{stage}]: {error}");
            error.exit_code()
        }
    }
}
