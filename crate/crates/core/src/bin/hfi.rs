use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hfi::evaluate::{self, DatasetManifest, EvalOptions, EvalReport};
use hfi::imaging::{read_image, CorruptionKind};
use hfi::registry::{AssetStatus, REGISTRY_ENV};
use hfi::scoring::{ensemble_score, write_score_csv, Scorer};
use hfi::{
    DistanceKind, Distances, Error, FilterSpec, Lpips, Reconstructor, ReconstructorHandle, Registry, ScorerConfig,
};

/// Side used by the built-in classical handles when no registry is given.
const BUILTIN_SIDE: usize = 256;

#[derive(Parser)]
#[command(name = "hfi", version, about = "Training-free detection of autoencoder-generated images")]
struct Cli {
    /// Registry TOML. Without one, the built-in classical handles are used.
    #[arg(long, global = true, env = REGISTRY_ENV)]
    registry: Option<PathBuf>,

    /// Worker threads for scoring.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScoreArgs {
    /// Score functions; comma separated.
    #[arg(long, value_delimiter = ',', default_value = "hfi")]
    scorer: Vec<String>,

    /// Distances: lpips, lpips1..lpips5, mse, l1. Default: lpips2 when an
    /// LPIPS asset is registered, mse otherwise.
    #[arg(long, value_delimiter = ';')]
    distance: Vec<String>,

    /// Low-pass filters in canonical form; separate several with `;`.
    #[arg(long, value_delimiter = ';', default_value = "gaussian:k=3,sigma=0.8")]
    filter: Vec<String>,

    /// Extra blur applied before HFI by the bhfi scorer.
    #[arg(long, default_value = "gaussian:k=3,sigma=0.8")]
    blur: String,

    /// Reconstructor ids, comma separated, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    handles: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ablation {
    Filters,
    Distances,
    GaussianGrid,
}

#[derive(Subcommand)]
enum Command {
    /// Score images and print one CSV row per (image, handle) plus ensemble rows.
    Score {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[command(flatten)]
        opts: ScoreArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a detection benchmark, an ablation or a corruption sweep.
    Eval {
        /// CSV or JSON manifest with path,label,source_model.
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        opts: ScoreArgs,
        /// Sweep a corruption grid (jpeg: 8 qualities, crop: 6 fractions).
        #[arg(long, value_enum)]
        corrupt: Option<CorruptionArg>,
        /// Replace the filter or distance list with an ablation set.
        #[arg(long, value_enum)]
        ablate: Option<Ablation>,
        /// Report directory.
        #[arg(long, default_value = "hfi-report")]
        out: PathBuf,
        /// Histogram bins per population.
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Tell images of one autoencoder's model from another generator's.
    Attribute {
        /// Manifest of images from the model behind --handle.
        #[arg(long)]
        belonging: PathBuf,
        /// Manifest of images from another generator.
        #[arg(long)]
        other: PathBuf,
        /// Reconstructor id.
        #[arg(long)]
        handle: String,
        /// Distance; same default as for eval.
        #[arg(long)]
        distance: Option<String>,
        #[arg(long, default_value = "gaussian:k=3,sigma=0.8")]
        filter: String,
        #[arg(long, default_value = "hfi-report")]
        out: PathBuf,
    },
    /// Inspect the model registry.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
    /// Write a synthetic labeled corpus with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        side: usize,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generating handles from the built-in classical suite.
        #[arg(long, value_delimiter = ',', default_value = "classical-aa")]
        handles: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CorruptionArg {
    Jpeg,
    Crop,
}

#[derive(Subcommand)]
enum ModelsAction {
    /// Table of registered reconstructors and distance assets.
    List,
    /// Recompute asset checksums.
    Verify,
}

enum Failure {
    Config(String),
    Task(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_)
            | Error::Registry { .. }
            | Error::Manifest(_)
            | Error::Asset { .. }
            | Error::Contract(_)
            | Error::Geometry(_) => Failure::Config(e.to_string()),
            _ => Failure::Task(e.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Task(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    if cli.workers == 0 {
        return Err(Failure::Config("--workers must be at least 1".into()));
    }
    match cli.command {
        Command::Models { action } => models(cli.registry.as_deref(), action),
        Command::Synth { out, side, count, seed, handles } => {
            let suite = ReconstructorHandle::classical_suite(side);
            let gens = handles
                .iter()
                .map(|id| {
                    let h = suite.iter().find(|h| &h.id == id).cloned().ok_or_else(|| {
                        Failure::Config(format!("unknown built-in handle `{id}`"))
                    })?;
                    Ok(Reconstructor::open(h)?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            hfi::synth::write_corpus(&out, side, count, seed, &gens)?;
            println!("{}", out.join("manifest.csv").display());
            Ok(())
        }
        Command::Score { images, opts, out } => {
            let registry = registry(cli.registry.as_deref())?;
            let distances = distances(&registry)?;
            let aes = registry.open(&opts.handles)?;
            let configs = configs(&opts, &distances, None)?;
            let mut records = Vec::new();
            for path in &images {
                let img = match read_image(path) {
                    Ok(img) => img,
                    Err(e) => {
                        log::warn!("skipping {}: {e}", path.display());
                        continue;
                    }
                };
                let id = path.display().to_string();
                for cfg in &configs {
                    let o = ensemble_score(&id, &img, &aes, &distances, cfg)?;
                    records.extend(o.per_handle);
                    records.push(o.ensemble);
                }
            }
            if records.is_empty() {
                return Err(Failure::Task("no image could be scored".into()));
            }
            match out {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                    write_score_csv(&records, f)?;
                }
                None => write_score_csv(&records, std::io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Eval { manifest, opts, corrupt, ablate, out, bins } => {
            let registry = registry(cli.registry.as_deref())?;
            let distances = distances(&registry)?;
            let aes = registry.open(&opts.handles)?;
            let configs = configs(&opts, &distances, ablate)?;
            let m = DatasetManifest::load(&manifest)?;
            let eval_opts = EvalOptions { workers: cli.workers, histogram_bins: bins };
            let task_id = manifest.file_stem().map_or("task".into(), |s| s.to_string_lossy().into_owned());
            let report = match corrupt {
                None => evaluate::run_task(&task_id, &m, &aes, &distances, &configs, &eval_opts)?.report,
                Some(kind) => {
                    let kind = match kind {
                        CorruptionArg::Jpeg => CorruptionKind::Jpeg,
                        CorruptionArg::Crop => CorruptionKind::Crop,
                    };
                    evaluate::run_corruption_sweep(
                        &task_id,
                        &m,
                        &kind.default_grid(),
                        &aes,
                        &distances,
                        &configs,
                        &eval_opts,
                    )?
                }
            };
            finish(&report, &out)
        }
        Command::Attribute { belonging, other, handle, distance, filter, out } => {
            let registry = registry(cli.registry.as_deref())?;
            let distances = distances(&registry)?;
            let ae = registry.open(&[handle])?.remove(0);
            let kind = match distance {
                Some(d) => d.parse()?,
                None => default_distance(&distances),
            };
            check_distance(kind, &distances)?;
            let filter: FilterSpec = filter.parse()?;
            let b = DatasetManifest::load(&belonging)?;
            let o = DatasetManifest::load(&other)?;
            let opts = EvalOptions { workers: cli.workers, ..EvalOptions::default() };
            let report = evaluate::run_attribution("attribution", &b, &o, &ae, &distances, kind, &filter, &opts)?;
            finish(&report, &out)
        }
    }
}

fn finish(report: &EvalReport, out: &Path) -> CliResult {
    report.write_dir(out)?;
    report.write_summary(std::io::stdout().lock()).map_err(|e| Error::Io { path: out.to_path_buf(), source: e })?;
    println!("report written to {}", out.display());
    Ok(())
}

fn registry(path: Option<&Path>) -> CliResult<Registry> {
    match path {
        Some(p) => {
            if !p.is_file() {
                return Err(Failure::Config(format!("registry not found: {}", p.display())));
            }
            Ok(Registry::load(p)?)
        }
        None => {
            log::info!("no registry given, using built-in classical handles at side {BUILTIN_SIDE}");
            Ok(Registry {
                path: PathBuf::from("<built-in>"),
                reconstructors: ReconstructorHandle::classical_suite(BUILTIN_SIDE),
                distance_assets: Vec::new(),
            })
        }
    }
}

fn distances(registry: &Registry) -> CliResult<Distances> {
    Ok(match registry.distance_asset() {
        Some(asset) => Distances::with_lpips(Lpips::open(asset)?),
        None => Distances::pixel_only(),
    })
}

fn default_distance(distances: &Distances) -> DistanceKind {
    if distances.has_lpips() {
        DistanceKind::LpipsLayer(2)
    } else {
        log::warn!("no LPIPS asset registered: falling back to mse; scores are not comparable with lpips2");
        DistanceKind::Mse
    }
}

fn check_distance(kind: DistanceKind, distances: &Distances) -> CliResult {
    if kind.needs_lpips() && !distances.has_lpips() {
        return Err(Failure::Config(format!("distance `{kind}` needs a registered LPIPS asset")));
    }
    Ok(())
}

fn configs(opts: &ScoreArgs, distances: &Distances, ablate: Option<Ablation>) -> CliResult<Vec<ScorerConfig>> {
    let scorers = opts.scorer.iter().map(|s| s.parse::<Scorer>()).collect::<hfi::Result<Vec<_>>>()?;
    let mut kinds = opts.distance.iter().map(|s| s.parse::<DistanceKind>()).collect::<hfi::Result<Vec<_>>>()?;
    let mut filters = opts.filter.iter().map(|s| s.parse::<FilterSpec>()).collect::<hfi::Result<Vec<_>>>()?;
    match ablate {
        Some(Ablation::Filters) => filters = FilterSpec::ablation_set(),
        Some(Ablation::GaussianGrid) => filters = FilterSpec::gaussian_grid(),
        Some(Ablation::Distances) => kinds = distances.available(),
        None => {}
    }
    if kinds.is_empty() {
        kinds.push(default_distance(distances));
    }
    for &k in &kinds {
        check_distance(k, distances)?;
    }
    let blur: FilterSpec = opts.blur.parse()?;
    let mut out: Vec<ScorerConfig> = Vec::new();
    for &s in &scorers {
        for &k in &kinds {
            for f in &filters {
                let cfg = ScorerConfig::new(s, k).with_filter(*f).with_blur(blur);
                if !out.iter().any(|c| c.label() == cfg.label()) {
                    out.push(cfg);
                }
            }
        }
    }
    Ok(out)
}

fn models(path: Option<&Path>, action: ModelsAction) -> CliResult {
    let Some(path) = path else {
        return Err(Failure::Config(format!("no registry given (use --registry or {REGISTRY_ENV})")));
    };
    if !path.is_file() {
        return Err(Failure::Config(format!("registry not found: {}", path.display())));
    }
    let registry = Registry::parse(path)?;
    match action {
        ModelsAction::List => {
            println!("{:<24} {:<10} {:>6} {:>6}  corpus", "id", "kind", "side", "factor");
            for h in &registry.reconstructors {
                println!(
                    "{:<24} {:<10} {:>6} {:>6}  {}",
                    h.id,
                    h.kind_name(),
                    h.native_side,
                    h.downsampling,
                    h.training_corpus
                );
            }
            for d in &registry.distance_assets {
                println!("{:<24} {:<10} {:>6} {:>6}  -", d.id, "distance", "-", "-");
            }
            Ok(())
        }
        ModelsAction::Verify => {
            let checks = registry.verify();
            let mut bad = Vec::new();
            for c in &checks {
                let status = match &c.status {
                    AssetStatus::Ok => "ok",
                    AssetStatus::Missing => "missing",
                    AssetStatus::ChecksumMismatch { .. } => "checksum mismatch",
                };
                println!("{:<24} {:<18} {}", c.id, status, c.path.display());
                if let Some(p) = c.problem() {
                    bad.push(p);
                }
            }
            if bad.is_empty() {
                Ok(())
            } else {
                Err(Failure::Task(bad.join("\n")))
            }
        }
    }
}
