//! Command-line front end: `gen`, `train`, `heatmap`, `eval`.
//!
//! Values resolve as flag, then `--config` file, then built-in default. The
//! effective settings of every run are written to a JSON sidecar next to the
//! output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{AlphaName, AlphaSetting, RunConfig};
use crate::dataset::{self, AlphaMode, GenConfig};
use crate::error::{Error, Result};
use crate::eval::{self, DnnLocalizer, Localizer, PhysicalLocalizer, Provenance};
use crate::neuralloc::{self, MlpConfig, OptimizerKind};
use crate::physloc::{self, Resolution};
use crate::wavefield::{Excitation, Plate};
use crate::sha256_file;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DESK_SAMPLES: usize = 500;
const DESK_BINS: usize = 250;
const PAPER_SAMPLES: usize = 2500;
const PAPER_BINS: usize = 1000;
const DEFAULT_SNRS: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];
const DEFAULT_HEATMAP_RES: &str = "100x100";
const DEFAULT_EVAL_RES: &str = "50x50";

const AFTER_HELP: &str = "\
Files:
  datasets     GWDS0001: magic, u64 LE header length, JSON header, f32 LE records
  checkpoints  GWNN0001: magic, u64 LE header length, JSON header, f32 LE parameters
  sidecars     <output>.json (gen, train) or <output stem>.json (heatmap, eval)

Exit status: 0 success, 1 runtime or file-format failure, 2 usage error.";

#[derive(Debug, Parser)]
#[command(
    name = "gwloc",
    version,
    about = "Guided-wave damage localization on a simulated plate",
    after_help = AFTER_HELP
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for simulation and grid search.
    #[arg(long, global = true, env = "GWLOC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dataset and write it as GWDS0001.
    Gen(GenArgs),
    /// Train a localization network on a GWDS0001 dataset; writes GWNN0001.
    Train(TrainArgs),
    /// Score a grid of candidate damage cells for one dataset sample.
    Heatmap(HeatmapArgs),
    /// Sweep SNRs over the test split and report average localization error.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of samples.
    #[arg(long = "t")]
    samples: Option<usize>,
    /// Number of frequency bins.
    #[arg(long)]
    q: Option<usize>,
    /// Highest frequency in Hz.
    #[arg(long)]
    f_max: Option<f64>,
    /// Number of sensors.
    #[arg(long)]
    sensors: Option<usize>,
    /// Plate size as LENGTHxWIDTH in metres.
    #[arg(long, value_parser = parse_plate)]
    plate: Option<Plate>,
    /// `truncnorm`, `ideal` (alpha = 1) or a fixed number.
    #[arg(long, value_parser = parse_alpha)]
    alpha: Option<AlphaSetting>,
    /// Noise level in dB; `inf` for noiseless.
    #[arg(long)]
    snr: Option<f64>,
    /// Alpha fixed at 1 and no noise.
    #[arg(long)]
    ideal: bool,
    /// Redraw the sensor layout for every sample.
    #[arg(long)]
    per_sample_sensors: bool,
    /// Fraction of samples in the train split.
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Gaussian excitation centre in Hz (needs --excitation-width).
    #[arg(long, requires = "excitation_width")]
    excitation_center: Option<f64>,
    /// Gaussian excitation width in Hz.
    #[arg(long, requires = "excitation_center")]
    excitation_width: Option<f64>,
    /// Default to 2500 samples and 1000 bins instead of 500 and 250.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Sample index.
    #[arg(long)]
    index: usize,
    /// Grid as NXxNY [default: 100x100].
    #[arg(long)]
    resolution: Option<Resolution>,
    /// Use the noiseless record instead of the stored noisy one.
    #[arg(long)]
    clean: bool,
    /// CSV output; the sidecar goes next to it with a .json extension.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// SNRs in dB, comma separated [default: 5,10,15,20,25].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snrs: Option<Vec<f64>>,
    /// Trained checkpoint; repeat for several. Reported under its file stem.
    #[arg(long, value_name = "FILE")]
    dnn: Vec<PathBuf>,
    /// Include the correlation grid-search baseline.
    #[arg(long)]
    physical: bool,
    /// Physical baseline grid as NXxNY [default: 50x50].
    #[arg(long)]
    resolution: Option<Resolution>,
    /// Master seed for re-noising [default: the dataset's seed].
    #[arg(long)]
    seed: Option<u64>,
    /// CSV report; the sidecar goes next to it with a .json extension.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// Failure split by exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(msg) => Failure::Usage(msg),
            e @ Error::Index { .. } => Failure::Usage(e.to_string()),
            e => Failure::Runtime(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => {
            require_file(path)?;
            RunConfig::load(path)?
        }
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, e.g. when called twice in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Gen(a) => cmd_gen(a, &cfg),
        Command::Train(a) => cmd_train(a, &cfg),
        Command::Heatmap(a) => cmd_heatmap(a, &cfg),
        Command::Eval(a) => cmd_eval(a, &cfg),
    }
}

fn parse_plate(s: &str) -> std::result::Result<Plate, String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("plate must look like 1.0x1.0, got {s:?}"))?;
    let length = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let width = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Plate::new(length, width).map_err(|e| e.to_string())
}

fn parse_alpha(s: &str) -> std::result::Result<AlphaSetting, String> {
    match s.to_ascii_lowercase().as_str() {
        "truncnorm" => Ok(AlphaSetting::Named(AlphaName::Truncnorm)),
        "ideal" => Ok(AlphaSetting::Named(AlphaName::Ideal)),
        other => other
            .parse::<f64>()
            .map(AlphaSetting::Fixed)
            .map_err(|_| format!("alpha must be truncnorm, ideal or a number, got {s:?}")),
    }
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("input file {} does not exist", path.display())))
    }
}

fn require_out_dir(path: &Path) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "output directory {} does not exist",
            dir.display()
        )))
    }
}

/// `<out>.json`, for binary outputs.
fn appended_sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// `<out stem>.json`, for CSV outputs.
fn replaced_sidecar(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        appended_sidecar(out)
    } else {
        out.with_extension("json")
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn resolve_gen(a: &GenArgs, cfg: &RunConfig) -> Result<GenConfig> {
    let g = &cfg.gen;
    let paper = a.paper_scale || g.paper_scale.unwrap_or(false);
    let base = GenConfig::default();
    let mut out = GenConfig {
        samples: a
            .samples
            .or(g.t)
            .unwrap_or(if paper { PAPER_SAMPLES } else { DESK_SAMPLES }),
        bins: a.q.or(g.q).unwrap_or(if paper { PAPER_BINS } else { DESK_BINS }),
        f_max: a.f_max.or(g.f_max).unwrap_or(base.f_max),
        sensors: a.sensors.or(g.sensors).unwrap_or(base.sensors),
        plate: a
            .plate
            .or(g.plate.map(|[l, w]| Plate { length: l, width: w }))
            .unwrap_or(base.plate),
        modes: g.modes.clone().unwrap_or(base.modes),
        alpha: base.alpha,
        snr_db: base.snr_db,
        excitation: match (a.excitation_center, a.excitation_width) {
            (Some(center_hz), Some(width_hz)) => Excitation::Gaussian { center_hz, width_hz },
            _ => g.excitation.unwrap_or(base.excitation),
        },
        per_sample_sensors: a.per_sample_sensors || g.per_sample_sensors.unwrap_or(false),
        train_fraction: a
            .train_fraction
            .or(g.train_fraction)
            .unwrap_or(base.train_fraction),
        seed: a.seed.or(cfg.seed).unwrap_or(0),
    };
    if a.ideal || g.ideal.unwrap_or(false) {
        out = out.ideal();
    }
    match a.alpha.or(g.alpha) {
        Some(AlphaSetting::Named(AlphaName::Truncnorm)) => out.alpha = AlphaMode::TruncNorm,
        Some(AlphaSetting::Named(AlphaName::Ideal)) => out.alpha = AlphaMode::Fixed(1.0),
        Some(AlphaSetting::Fixed(v)) => out.alpha = AlphaMode::Fixed(v),
        None => {}
    }
    if let Some(snr) = a.snr.or(g.snr) {
        out.snr_db = if snr == f64::INFINITY { None } else { Some(snr) };
    }
    out.validate()?;
    Ok(out)
}

fn cmd_gen(a: GenArgs, cfg: &RunConfig) -> CliResult<()> {
    let gen = resolve_gen(&a, cfg)?;
    require_out_dir(&a.out)?;
    let ds = dataset::generate(&gen)?;
    dataset::write_dataset(&ds, &a.out)?;
    let digest = sha256_file(&a.out)?;
    write_json(
        &appended_sidecar(&a.out),
        &json!({
            "command": "gen",
            "output": file_name(&a.out),
            "output_sha256": digest,
            "config": gen,
        }),
    )?;
    println!(
        "wrote {} samples ({} train, {} test), Q={}, M={} pairs to {}",
        ds.len(),
        ds.split.train.len(),
        ds.split.test.len(),
        ds.grid.len(),
        ds.layout.pairs.len(),
        a.out.display()
    );
    Ok(())
}

fn resolve_train(a: &TrainArgs, cfg: &RunConfig, input_dim: usize) -> Result<MlpConfig> {
    let t = &cfg.train;
    let base = MlpConfig::new(input_dim);
    let out = MlpConfig {
        input_dim,
        hidden: a.hidden.clone().or(t.hidden.clone()).unwrap_or(base.hidden),
        output_dim: base.output_dim,
        dropout: a.dropout.or(t.dropout).unwrap_or(base.dropout),
        epochs: a.epochs.or(t.epochs).unwrap_or(base.epochs),
        batch_size: a.batch_size.or(t.batch_size).unwrap_or(base.batch_size),
        learning_rate: a
            .learning_rate
            .or(t.learning_rate)
            .unwrap_or(base.learning_rate),
        optimizer: a.optimizer.or(t.optimizer).unwrap_or(base.optimizer),
        seed: a.seed.or(cfg.seed).unwrap_or(0),
    };
    out.validate()?;
    Ok(out)
}

fn cmd_train(a: TrainArgs, cfg: &RunConfig) -> CliResult<()> {
    require_file(&a.data)?;
    require_out_dir(&a.out)?;
    let ds = dataset::read_dataset(&a.data)?;
    let mc = resolve_train(&a, cfg, ds.feature_dim())?;
    let ds = if ds.standardization.is_some() {
        ds
    } else {
        dataset::standardize_fit_transform(ds)?
    };
    let epochs = mc.epochs;
    let model = neuralloc::train_with(&ds, &mc, &mut |epoch, loss| {
        println!("epoch {epoch}/{epochs} loss {loss:.6}");
    })?;
    neuralloc::write_model(&model, &a.out)?;
    write_json(
        &appended_sidecar(&a.out),
        &json!({
            "command": "train",
            "data": file_name(&a.data),
            "dataset_sha256": sha256_file(&a.data)?,
            "output": file_name(&a.out),
            "output_sha256": sha256_file(&a.out)?,
            "config": mc,
            "training_log": model.training_log,
        }),
    )?;
    println!(
        "trained on {} samples, final loss {:.6}, wrote {}",
        ds.split.train.len(),
        model.training_log.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

fn resolution_or(flag: Option<Resolution>, file: Option<&String>, default: &str) -> Result<Resolution> {
    match (flag, file) {
        (Some(r), _) => Ok(r),
        (None, Some(s)) => s.parse(),
        (None, None) => default.parse(),
    }
}

fn cmd_heatmap(a: HeatmapArgs, cfg: &RunConfig) -> CliResult<()> {
    require_file(&a.data)?;
    require_out_dir(&a.out)?;
    let resolution = resolution_or(a.resolution, cfg.heatmap.resolution.as_ref(), DEFAULT_HEATMAP_RES)?;
    let ds = dataset::read_dataset(&a.data)?;
    let sample = ds
        .samples
        .get(a.index)
        .ok_or(Error::Index { index: a.index, len: ds.len() })?;
    let observed = if a.clean {
        sample
            .clean
            .as_ref()
            .ok_or_else(|| Error::format("dataset has no clean payload"))?
    } else {
        if ds.standardization.is_some() {
            return Err(Failure::Usage(
                "records are standardized; pass --clean to use the raw noiseless record".into(),
            ));
        }
        &sample.data
    };
    let layout = ds.layout_of(a.index)?;
    let model = ds.dispersion(1.0)?;
    let map = physloc::localize_grid_with(observed, &layout, &ds.grid, &model, &ds.excitation, resolution)
        .map_err(|e| Failure::from(e.at_sample(a.index)))?;
    let extra = json!({
        "command": "heatmap",
        "data": file_name(&a.data),
        "dataset_sha256": sha256_file(&a.data)?,
        "index": a.index,
        "clean": a.clean,
        "resolution": format!("{}x{}", resolution.nx, resolution.ny),
        "sample_alpha": sample.alpha,
        "sample_snr_db": if sample.snr_db.is_finite() { json!(sample.snr_db) } else { json!(null) },
    });
    map.write(&a.out, replaced_sidecar(&a.out), Some(sample.label), extra)?;
    let p = map.argmax();
    println!(
        "argmax ({:.4}, {:.4}) truth ({:.4}, {:.4}) error {:.4} m",
        p.x,
        p.y,
        sample.label.x,
        sample.label.y,
        p.distance(&sample.label)
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs, cfg: &RunConfig) -> CliResult<()> {
    require_file(&a.data)?;
    for path in &a.dnn {
        require_file(path)?;
    }
    require_out_dir(&a.out)?;
    if a.dnn.is_empty() && !a.physical {
        return Err(Failure::Usage("give at least one --dnn or --physical".into()));
    }
    let snrs = a
        .snrs
        .clone()
        .or(cfg.eval.snrs.clone())
        .unwrap_or(DEFAULT_SNRS.to_vec());
    if snrs.is_empty() || snrs.iter().any(|s| s.is_nan()) {
        return Err(Failure::Usage("--snrs needs at least one number".into()));
    }
    let resolution = resolution_or(a.resolution, cfg.eval.resolution.as_ref(), DEFAULT_EVAL_RES)?;
    let ds = dataset::read_dataset(&a.data)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(ds.config.seed);

    let mut model_sha = std::collections::BTreeMap::new();
    let mut dnns = Vec::with_capacity(a.dnn.len());
    for path in &a.dnn {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dnn".into());
        let model = neuralloc::read_model(path)?;
        if model.config.input_dim != ds.feature_dim() {
            return Err(Failure::Runtime(Error::shape(format!(
                "model {} expects {} features, dataset has {}",
                path.display(),
                model.config.input_dim,
                ds.feature_dim()
            ))));
        }
        model_sha.insert(id.clone(), sha256_file(path)?);
        dnns.push(DnnLocalizer::new(id, model));
    }
    let physical = PhysicalLocalizer::new("physical", resolution);
    let mut methods: Vec<&dyn Localizer> = dnns.iter().map(|d| d as &dyn Localizer).collect();
    if a.physical {
        methods.push(&physical);
    }

    let mut report = eval::sweep(&ds, &snrs, &methods, seed)?;
    report.provenance = Provenance {
        dataset_sha256: Some(sha256_file(&a.data)?),
        model_sha256: model_sha,
        master_seed: seed,
        config: json!({
            "command": "eval",
            "data": file_name(&a.data),
            "snrs": snrs,
            "dnn": a.dnn.iter().map(|p| file_name(p)).collect::<Vec<_>>(),
            "physical": a.physical,
            "resolution": format!("{}x{}", resolution.nx, resolution.ny),
            "test_samples": ds.split.test.len(),
        }),
    };
    report.write(&a.out, replaced_sidecar(&a.out))?;
    print!("{}", report.to_csv());
    Ok(())
}
