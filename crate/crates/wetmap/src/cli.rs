//! The `wetmap` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or
//! format error, 3 numerical divergence during training.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use wetmap_core::folds::{make_folds, run_fold, summarize, FoldError, FoldResult, FoldSpec, FOLD_COUNT};
use wetmap_core::geo::{
    build_corpus, plan_tiles, rasterize_polygons, stitch, GeoError, GeoRaster, LabelRaster, Tile, TilePlan,
    TilePrediction, CORE_SIZE,
};
use wetmap_core::metrics::{agreement_map, confusion, precision_recall_f1, MetricsError};
use wetmap_core::model::{predict_raster, ModelError, NetSpec};
use wetmap_core::optim::{train, EpochStats, OptimError};
use wetmap_core::postproc::{
    area_report, connected_components, filter_min_area, threshold, vectorize, Connectivity, VectorLayer,
};
use wetmap_core::synth::{generate, SynthError};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{default_crs, RunConfig};
use crate::error::Error;
use crate::geojson::{read_geojson, write_geojson};
use crate::raster_io::{
    read_grid, read_probability, read_raster, to_rgb, world_file_path, write_agreement, write_mask, write_probability,
    write_raster,
};
use crate::report::{to_json, CvMetrics, EvalMetrics, HistoryLine, ScoreBlock};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<OptimError> for CliError {
    fn from(e: OptimError) -> Self {
        match e {
            OptimError::NonFiniteGradient { .. } | OptimError::Divergence { .. } => CliError::Divergence(e.to_string()),
            OptimError::InvalidConfig(_) => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<FoldError> for CliError {
    fn from(e: FoldError) -> Self {
        match e {
            FoldError::Training { fold, source } => match CliError::from(source) {
                CliError::Divergence(m) => CliError::Divergence(format!("fold {fold}: {m}")),
                CliError::Config(m) => CliError::Config(format!("fold {fold}: {m}")),
                other => CliError::Data(format!("fold {fold}: {other}")),
            },
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(ModelError, GeoError, MetricsError);

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "wetmap",
    version,
    about = "Extract wetland polygons from scanned historical maps"
)]
pub struct Cli {
    /// No progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic hatched-wetland map with its labels and ground-truth polygons.
    Synth(SynthArgs),
    /// Train one network on every tile of a labeled map.
    Train(TrainArgs),
    /// Ten-fold spatial cross-validation with out-of-fold predictions.
    CrossValidate(CvArgs),
    /// Wetland probability raster from a checkpoint.
    Predict(PredictArgs),
    /// Threshold, trace and area-filter a probability raster into polygons.
    Vectorize(VectorizeArgs),
    /// Pixel metrics and an agreement map against reference polygons.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override one config value, e.g. `--set train.epochs=15`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct OptionalConfig {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config value, e.g. `--set postproc.threshold=0.6`.
    #[arg(long = "set", value_name = "KEY=VALUE", requires = "config")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory [default: paths.synth_dir].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Map PNG with a `.pgw` world file [default: paths.map, then the synth map].
    #[arg(long)]
    map: Option<PathBuf>,
    /// Reference wetland polygons [default: paths.labels, then the synth truth].
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory [default: paths.out].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Folds trained concurrently. Results do not depend on this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=10))]
    jobs: u64,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    config: OptionalConfig,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Map PNG with a `.pgw` world file.
    #[arg(long)]
    map: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Hidden channel counts the checkpoint must have, e.g. `16,8,8,8,8,8`
    /// [default: hidden_channels of the config, if given].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    hidden_channels: Option<Vec<usize>>,
    /// Extra context pixels per window [default: overlap_margin of the config, else 0].
    #[arg(long)]
    margin: Option<usize>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ConnectivityArg {
    Eight,
    Four,
}

#[derive(Debug, Args)]
struct PostprocArgs {
    /// Probabilities strictly above this are wetland [default: 0.5].
    #[arg(long)]
    threshold: Option<f32>,
    /// Features smaller than this many square metres are removed [default: 1000].
    #[arg(long)]
    min_area: Option<f64>,
    #[arg(long, value_enum)]
    connectivity: Option<ConnectivityArg>,
}

#[derive(Debug, Args)]
struct VectorizeArgs {
    #[command(flatten)]
    config: OptionalConfig,
    /// 16-bit probability PNG with a `.pgw` world file.
    #[arg(long)]
    prob: PathBuf,
    /// Output GeoJSON.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    post: PostprocArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: OptionalConfig,
    /// Prediction: a probability PNG, or GeoJSON polygons.
    #[arg(long)]
    pred: PathBuf,
    /// Reference polygons (GeoJSON).
    #[arg(long)]
    truth: PathBuf,
    /// Output metrics JSON; the agreement map goes next to it.
    #[arg(long)]
    out: PathBuf,
    /// Raster defining the evaluation grid for GeoJSON predictions
    /// [default: the configured map].
    #[arg(long)]
    grid: Option<PathBuf>,
    #[command(flatten)]
    post: PostprocArgs,
}

/// Parse `args` (program name first), run, and return the process exit code.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let ctx = Ctx { quiet: cli.quiet };
    match &cli.command {
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::CrossValidate(a) => cmd_cross_validate(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Vectorize(a) => cmd_vectorize(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
    }
}

fn load_config(a: &ConfigArgs) -> CliResult<RunConfig> {
    Ok(RunConfig::load(&a.config, &a.overrides)?)
}

fn load_optional(a: &OptionalConfig) -> CliResult<Option<RunConfig>> {
    a.config
        .as_ref()
        .map(|p| RunConfig::load(p, &a.overrides))
        .transpose()
        .map_err(Into::into)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| {
        CliError::from(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| {
        CliError::from(Error::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn out_dir(flag: &Option<PathBuf>, cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = flag
        .clone()
        .or_else(|| cfg.paths.out.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set paths.out".into()))?;
    create_dir(&dir)?;
    write_file(&dir.join("config.json"), &cfg.to_json())?;
    Ok(dir)
}

fn input(
    flag: &Option<PathBuf>,
    configured: &Option<PathBuf>,
    synth: &Option<PathBuf>,
    what: &str,
    synth_name: &str,
) -> CliResult<PathBuf> {
    flag.clone()
        .or_else(|| configured.clone())
        .or_else(|| synth.as_ref().map(|d| d.join(synth_name)))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "no {what}: pass --{what} or set paths.{what} or paths.synth_dir"
            ))
        })
}

/// Map raster in three channels, checked against the configured pixel size.
fn load_map(path: &Path, cfg: Option<&RunConfig>) -> CliResult<GeoRaster> {
    let crs = cfg.map_or_else(default_crs, |c| c.crs.clone());
    let raster = to_rgb(read_raster(path, &world_file_path(path), &crs)?);
    if let Some(cfg) = cfg {
        check_pixel_size(path, &raster.transform, cfg.pixel_size)?;
    }
    Ok(raster)
}

fn check_pixel_size(path: &Path, t: &wetmap_core::geo::GeoTransform, want: f64) -> CliResult<()> {
    let close = |v: f64| (v - want).abs() <= 1e-9 * want;
    if !close(t.pixel_size_x) || !close(t.pixel_size_y) {
        return Err(CliError::Data(format!(
            "{}: world file pixel size {} x {} differs from configured pixel_size {want}",
            path.display(),
            t.pixel_size_x,
            t.pixel_size_y
        )));
    }
    Ok(())
}

fn load_reference(path: &Path, crs: &str) -> CliResult<VectorLayer> {
    let layer = read_geojson(path)?;
    if !layer.crs.is_empty() && layer.crs != crs {
        return Err(CliError::Data(format!(
            "{}: CRS {:?} differs from the raster CRS {crs:?}",
            path.display(),
            layer.crs
        )));
    }
    Ok(layer)
}

struct Corpus {
    raster: GeoRaster,
    reference: VectorLayer,
    plan: TilePlan,
    folds: FoldSpec,
    tiles: Vec<Tile>,
}

fn load_corpus(ctx: &Ctx, cfg: &RunConfig, data: &DataArgs, spec: &NetSpec) -> CliResult<Corpus> {
    let map = input(&data.map, &cfg.paths.map, &cfg.paths.synth_dir, "map", "map.png")?;
    let labels = input(
        &data.labels,
        &cfg.paths.labels,
        &cfg.paths.synth_dir,
        "labels",
        "truth.geojson",
    )?;
    let raster = load_map(&map, Some(cfg))?;
    let reference = load_reference(&labels, &cfg.crs)?;
    let (rows, cols) = (raster.rows(), raster.cols());
    let label = rasterize_polygons(&reference, &raster.transform, rows, cols)?;
    let plan = plan_tiles(rows, cols, CORE_SIZE, spec.halo(), cfg.overlap_margin);
    let folds = make_folds(&raster.transform.bounds(rows, cols), cfg.fold_axis)?;
    let tiles = build_corpus(&raster, &label, &plan, &folds)?;
    ctx.note(format!(
        "{}: {rows}x{cols} px, {} tiles, {} reference polygons",
        map.display(),
        tiles.len(),
        reference.features.len()
    ));
    Ok(Corpus {
        raster,
        reference,
        plan,
        folds,
        tiles,
    })
}

/// Streams `history.jsonl` while training runs.
struct History<'a> {
    out: BufWriter<File>,
    path: PathBuf,
    start: Instant,
    failed: Option<std::io::Error>,
    label: String,
    epochs: usize,
    ctx: &'a Ctx,
}

impl<'a> History<'a> {
    fn create(path: PathBuf, label: String, epochs: usize, ctx: &'a Ctx) -> CliResult<Self> {
        let file = File::create(&path).map_err(|source| {
            CliError::from(Error::Io {
                path: path.clone(),
                source,
            })
        })?;
        Ok(History {
            out: BufWriter::new(file),
            path,
            start: Instant::now(),
            failed: None,
            label,
            epochs,
            ctx,
        })
    }

    fn record(&mut self, s: &EpochStats) {
        let line = HistoryLine::new(s, self.start.elapsed().as_secs_f64());
        let json = serde_json::to_string(&line).expect("history serializes");
        if self.failed.is_none() {
            if let Err(e) = writeln!(self.out, "{json}").and_then(|_| self.out.flush()) {
                self.failed = Some(e);
            }
        }
        self.ctx.note(format!(
            "{}epoch {}/{}: train {:.5} validation {:.5} ({:.0} s)",
            self.label, s.epoch, self.epochs, s.train_loss, s.validation_loss, line.wall_time_s
        ));
    }

    fn finish(self) -> CliResult<()> {
        match self.failed {
            None => Ok(()),
            Some(source) => Err(Error::Io {
                path: self.path,
                source,
            }
            .into()),
        }
    }
}

fn netspec(cfg: &RunConfig) -> CliResult<NetSpec> {
    cfg.netspec().map_err(CliError::Config)
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs) -> CliResult<()> {
    let cfg = load_config(&a.config)?;
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.paths.synth_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set paths.synth_dir".into()))?;
    create_dir(&dir)?;
    write_file(&dir.join("config.json"), &cfg.to_json())?;
    let map = generate(&cfg.synth_config())?;
    let map_png = dir.join("map.png");
    write_raster(&map_png, &world_file_path(&map_png), &map.raster)?;
    let labels_png = dir.join("labels.png");
    write_mask(
        &labels_png,
        &world_file_path(&labels_png),
        &map.labels.label,
        &map.raster.transform,
    )?;
    write_geojson(&dir.join("truth.geojson"), &map.truth)?;
    let n = map.raster.rows() * map.raster.cols();
    ctx.note(format!(
        "{}: {}x{} px, {} wetlands covering {:.1}% of the sheet",
        dir.display(),
        map.raster.rows(),
        map.raster.cols(),
        map.truth.features.len(),
        100.0 * map.labels.label.count() as f64 / n as f64
    ));
    Ok(())
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> CliResult<()> {
    let cfg = load_config(&a.config)?;
    let spec = netspec(&cfg)?;
    let dir = out_dir(&a.data.out, &cfg)?;
    let corpus = load_corpus(ctx, &cfg, &a.data, &spec)?;
    let refs: Vec<&Tile> = corpus.tiles.iter().collect();
    let mut history = History::create(dir.join("history.jsonl"), String::new(), cfg.train.epochs, ctx)?;
    let outcome = train(&refs, &cfg.train, &spec, &mut |s| history.record(s))?;
    history.finish()?;
    save_checkpoint(&dir.join("model.gskw"), &outcome.checkpoint)?;
    let m = outcome.checkpoint.meta;
    ctx.note(format!(
        "{}: best validation loss {:.5} at epoch {}",
        dir.display(),
        m.validation_loss,
        m.epoch
    ));
    Ok(())
}

fn run_folds(
    ctx: &Ctx,
    corpus: &Corpus,
    cfg: &RunConfig,
    spec: &NetSpec,
    dir: &Path,
    jobs: usize,
) -> CliResult<Vec<FoldResult>> {
    if let Some(f) = (0..FOLD_COUNT).find(|&f| corpus.tiles.iter().all(|t| t.fold != f)) {
        return Err(FoldError::EmptyFold(f).into());
    }
    for k in 0..FOLD_COUNT {
        create_dir(&dir.join(format!("fold_{k}")))?;
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CliResult<FoldResult>>>> = Mutex::new((0..FOLD_COUNT).map(|_| None).collect());
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        if k >= FOLD_COUNT {
            break;
        }
        let result = (|| {
            let path = dir.join(format!("fold_{k}")).join("history.jsonl");
            let mut history = History::create(path, format!("fold {k} "), cfg.train.epochs, ctx)?;
            let r = run_fold(&corpus.tiles, k, spec, &cfg.train, &mut |s| history.record(s))?;
            history.finish()?;
            save_checkpoint(&dir.join(format!("fold_{k}")).join("model.gskw"), &r.checkpoint)?;
            Ok(r)
        })();
        slots.lock().expect("no worker panicked")[k] = Some(result);
    };
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(worker);
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect()
}

fn postprocess(prob: &GeoRaster, cut: f32, connectivity: Connectivity, min_area: f64) -> VectorLayer {
    let layer = vectorize(
        &connected_components(&threshold(prob, cut), connectivity),
        &prob.transform,
    );
    filter_min_area(&layer, min_area)
}

fn cmd_cross_validate(ctx: &Ctx, a: &CvArgs) -> CliResult<()> {
    let cfg = load_config(&a.config)?;
    let spec = netspec(&cfg)?;
    let dir = out_dir(&a.data.out, &cfg)?;
    let corpus = load_corpus(ctx, &cfg, &a.data, &spec)?;
    write_file(&dir.join("folds.json"), &to_json(&corpus.folds))?;
    let results = run_folds(ctx, &corpus, &cfg, &spec, &dir, a.jobs as usize)?;

    let mut preds = Vec::with_capacity(corpus.tiles.len());
    for f in &results {
        for (&i, p) in f.evaluated.iter().zip(&f.predictions) {
            preds.push(TilePrediction {
                origin: corpus.tiles[i].origin,
                values: p.clone(),
            });
        }
    }
    let oof = stitch(&preds, &corpus.plan, &corpus.raster.transform)?;
    let oof_png = dir.join("oof_probability.png");
    write_probability(&oof_png, &world_file_path(&oof_png), &oof)?;
    let p = &cfg.postproc;
    let layer = postprocess(&oof, p.threshold, p.connectivity, p.min_area_m2);
    write_geojson(&dir.join("oof.geojson"), &layer)?;

    let reference_total = corpus.reference.total_area();
    let area = (reference_total > 0.0)
        .then(|| area_report(&layer, reference_total))
        .transpose()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let report = summarize(results, corpus.tiles.len());
    let metrics = CvMetrics::new(&report, area);
    write_file(&dir.join("metrics.json"), &to_json(&metrics))?;
    match &metrics.pooled.scores {
        Some(s) => ctx.note(format!(
            "pooled precision {:.3} recall {:.3} F1 {:.3}",
            s.precision, s.recall, s.f1
        )),
        None => ctx.note(format!(
            "pooled scores undefined: {}",
            metrics.pooled.undefined.as_deref().unwrap_or("")
        )),
    }
    Ok(())
}

fn cmd_predict(ctx: &Ctx, a: &PredictArgs) -> CliResult<()> {
    let cfg = load_optional(&a.config)?;
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let wanted = match (&a.hidden_channels, &cfg) {
        (Some(h), _) => Some(h.clone()),
        (None, Some(c)) => Some(c.hidden_channels.clone()),
        (None, None) => None,
    };
    if let Some(h) = wanted {
        let spec = NetSpec::with_hidden(&h).map_err(|e| CliError::Usage(e.to_string()))?;
        if spec != ckpt.spec {
            return Err(CliError::Data(format!(
                "{}: checkpoint shape mismatch: it has hidden channels {:?}, expected {:?}",
                a.checkpoint.display(),
                ckpt.spec.hidden_channels(),
                h
            )));
        }
    }
    ckpt.weights.check_against(&ckpt.spec)?;
    let raster = load_map(&a.map, cfg.as_ref())?;
    let mut eff = cfg
        .clone()
        .unwrap_or_else(|| RunConfig::with_pixel_size(raster.transform.pixel_size_x));
    eff.hidden_channels = ckpt.spec.hidden_channels();
    eff.overlap_margin = a.margin.unwrap_or(eff.overlap_margin);
    create_dir(&a.out)?;
    write_file(&a.out.join("config.json"), &eff.to_json())?;
    let prob = predict_raster(
        &ckpt.spec,
        &ckpt.weights,
        &raster,
        eff.overlap_margin,
        eff.train.micro_batch,
    )?;
    let png = a.out.join("probability.png");
    write_probability(&png, &world_file_path(&png), &prob)?;
    ctx.note(format!(
        "{}: {}x{} probabilities",
        png.display(),
        prob.rows(),
        prob.cols()
    ));
    Ok(())
}

fn resolve_post(post: &PostprocArgs, cfg: Option<&RunConfig>) -> CliResult<(f32, Connectivity, f64)> {
    let d = cfg.map(|c| c.postproc.clone()).unwrap_or_default();
    let cut = post.threshold.unwrap_or(d.threshold);
    let min_area = post.min_area.unwrap_or(d.min_area_m2);
    let conn = match post.connectivity {
        Some(ConnectivityArg::Eight) => Connectivity::Eight,
        Some(ConnectivityArg::Four) => Connectivity::Four,
        None => d.connectivity,
    };
    if !(0.0..=1.0).contains(&cut) {
        return Err(CliError::Usage(format!("--threshold must lie in [0, 1], got {cut}")));
    }
    if !(min_area >= 0.0) {
        return Err(CliError::Usage(format!(
            "--min-area must be non-negative, got {min_area}"
        )));
    }
    Ok((cut, conn, min_area))
}

fn cmd_vectorize(ctx: &Ctx, a: &VectorizeArgs) -> CliResult<()> {
    let cfg = load_optional(&a.config)?;
    let (cut, conn, min_area) = resolve_post(&a.post, cfg.as_ref())?;
    let crs = cfg.as_ref().map_or_else(default_crs, |c| c.crs.clone());
    let prob = read_probability(&a.prob, &world_file_path(&a.prob), &crs)?;
    if let Some(c) = &cfg {
        check_pixel_size(&a.prob, &prob.transform, c.pixel_size)?;
    }
    let layer = postprocess(&prob, cut, conn, min_area);
    write_geojson(&a.out, &layer)?;
    ctx.note(format!(
        "{}: {} features, {:.0} m²",
        a.out.display(),
        layer.features.len(),
        layer.total_area()
    ));
    Ok(())
}

fn is_png(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> CliResult<()> {
    let cfg = load_optional(&a.config)?;
    let (cut, conn, min_area) = resolve_post(&a.post, cfg.as_ref())?;
    let crs = cfg.as_ref().map_or_else(default_crs, |c| c.crs.clone());
    let (pred, pred_layer, transform) = if is_png(&a.pred) {
        let prob = read_probability(&a.pred, &world_file_path(&a.pred), &crs)?;
        let layer = postprocess(&prob, cut, conn, min_area);
        (threshold(&prob, cut), layer, prob.transform)
    } else {
        let layer = load_reference(&a.pred, &crs)?;
        let grid = a
            .grid
            .clone()
            .or_else(|| cfg.as_ref().and_then(|c| c.paths.map.clone()))
            .or_else(|| {
                cfg.as_ref()
                    .and_then(|c| c.paths.synth_dir.as_ref().map(|d| d.join("map.png")))
            })
            .ok_or_else(|| CliError::Usage("a GeoJSON prediction needs --grid or a configured map".into()))?;
        let (rows, cols, t) = read_grid(&grid, &world_file_path(&grid), &crs)?;
        let mask = rasterize_polygons(&layer, &t, rows, cols)?.label;
        (mask, layer, t)
    };
    if let Some(c) = &cfg {
        check_pixel_size(&a.pred, &transform, c.pixel_size)?;
    }
    let truth = load_reference(&a.truth, &crs)?;
    let labels: LabelRaster = rasterize_polygons(&truth, &transform, pred.rows(), pred.cols())?;
    let c = confusion(&pred, &labels.label, &labels.valid)?;
    let agreement = agreement_map(&pred, &labels.label, &labels.valid)?;
    let agreement_png = a.out.with_extension("agreement.png");
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_agreement(&agreement_png, &world_file_path(&agreement_png), &agreement, &transform)?;
    let reference_total = truth.total_area();
    let area = (reference_total > 0.0)
        .then(|| area_report(&pred_layer, reference_total))
        .transpose()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let metrics = EvalMetrics {
        generator: crate::geojson::GENERATOR.to_string(),
        result: ScoreBlock::new(c, &precision_recall_f1(&c)),
        agreement: (&agreement).into(),
        agreement_map: agreement_png
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        area: area.map(Into::into),
    };
    write_file(&a.out, &to_json(&metrics))?;
    match &metrics.result.scores {
        Some(s) => ctx.note(format!(
            "precision {:.3} recall {:.3} F1 {:.3}",
            s.precision, s.recall, s.f1
        )),
        None => ctx.note(format!(
            "scores undefined: {}",
            metrics.result.undefined.as_deref().unwrap_or("")
        )),
    }
    Ok(())
}
