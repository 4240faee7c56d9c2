//! PolSAR processing pipeline front end:
//! decompose -> mvd -> dataset -> fuse-demo -> evaluate, plus a
//! synthetic-scene generator for tests and demos.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polsar_cli::commands;
use polsar_cli::config::PipelineConfig;
use polsar_cli::error::CliError;

#[derive(Parser)]
#[command(name = "polsar", version, about = "PolSAR decomposition, scattering-class rasters and fusion-prompt demo")]
struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized stages (required by synth and fuse-demo).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count. Falls back to POLSAR_THREADS, then to the
    /// number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct DecomposeArgs {
    /// Input SLC scene.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Multilook window (odd).
    #[arg(long)]
    window: Option<usize>,
    /// Percentile clip for the Pauli rendering.
    #[arg(long)]
    clip_lo: Option<f64>,
    #[arg(long)]
    clip_hi: Option<f64>,
    /// Feature stacks to export (haa3|t6|t9|haat12, comma-separated).
    #[arg(long, value_delimiter = ',')]
    stacks: Option<Vec<String>>,
}

#[derive(Args, Default)]
struct MvdArgs {
    /// Cluster count (1..=8); defaults to the eight H/alpha zones.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Best/second-best distance ratio above which a pixel is 'mixed'.
    #[arg(long)]
    mixed_threshold: Option<f64>,
    /// SPAN tiers per odd/volume group.
    #[arg(long)]
    n_sub: Option<usize>,
}

#[derive(Args)]
struct DatasetArgs {
    /// Pseudo-color raster (PNG).
    #[arg(long)]
    pseudo: PathBuf,
    /// MVD raster (MVD1).
    #[arg(long)]
    mvd: PathBuf,
    #[arg(long)]
    tile_size: Option<u32>,
    #[arg(long)]
    stride: Option<u32>,
    /// Split ratios, e.g. 6,2,2.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<u32>>,
    /// Geographic split axis (x|y).
    #[arg(long)]
    split_axis: Option<String>,
    /// Class id whose near-pure tiles are removed.
    #[arg(long)]
    purity_class: Option<u8>,
    /// Purity threshold in (0, 1].
    #[arg(long)]
    purity: Option<f64>,
}

#[derive(Args)]
struct FuseDemoArgs {
    #[arg(long)]
    pseudo: PathBuf,
    #[arg(long)]
    mvd: PathBuf,
    /// Embedding width C.
    #[arg(long)]
    channels: Option<usize>,
    /// Sparse prompt count N.
    #[arg(long)]
    sparse: Option<usize>,
    /// Feature-map side length (input crop is 4x larger).
    #[arg(long)]
    feat: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of predicted .mvd rasters.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth .mvd rasters.
    #[arg(long)]
    gt: PathBuf,
}

#[derive(Args, Default)]
struct SynthArgs {
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Per-channel SNR of the speckle, in dB.
    #[arg(long)]
    snr_db: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Pauli decomposition, coherency, eigen features, feature stacks.
    Decompose(DecomposeArgs),
    /// Scattering-mechanism classification and MVD raster generation.
    Mvd(MvdArgs),
    /// Tile a raster pair into a split, filtered dataset.
    Dataset(DatasetArgs),
    /// Run the fusion-prompt chain on one tile pair.
    FuseDemo(FuseDemoArgs),
    /// Compare predicted label rasters against ground truth.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic SLC scene with ground truth.
    Synth(SynthArgs),
}

fn build_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(threads) = cli.threads {
        config.threads = Some(threads);
    } else if config.threads.is_none() {
        // environment honored only when the flag is absent
        if let Ok(value) = std::env::var("POLSAR_THREADS") {
            let parsed = value.parse().map_err(|_| {
                CliError::Validation(format!("POLSAR_THREADS must be a number, got {value}"))
            })?;
            config.threads = Some(parsed);
        }
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = build_config(&cli)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }

    match &cli.command {
        Command::Decompose(args) => {
            if let Some(v) = &args.input {
                config.input = Some(v.clone());
            }
            if let Some(v) = args.window {
                config.window = v;
            }
            if let Some(v) = args.clip_lo {
                config.clip_lo = v;
            }
            if let Some(v) = args.clip_hi {
                config.clip_hi = v;
            }
            if let Some(v) = &args.stacks {
                config.stacks = v.clone();
            }
            config.validate()?;
            commands::decompose::run(&config)
        }
        Command::Mvd(args) => {
            if let Some(v) = args.k {
                config.k = Some(v);
            }
            if let Some(v) = args.max_iter {
                config.max_iter = v;
            }
            if let Some(v) = args.rel_tol {
                config.rel_tol = v;
            }
            if let Some(v) = args.mixed_threshold {
                config.mixed_threshold = v;
            }
            if let Some(v) = args.n_sub {
                config.n_sub = v;
            }
            config.validate()?;
            commands::mvd::run(&config)
        }
        Command::Dataset(args) => {
            if let Some(v) = args.tile_size {
                config.tile_size = v;
            }
            if let Some(v) = args.stride {
                config.stride = Some(v);
            }
            if let Some(v) = &args.ratios {
                config.ratios = v.clone();
            }
            if let Some(v) = &args.split_axis {
                config.split_axis = v.clone();
            }
            if let Some(v) = args.purity_class {
                config.purity_class = Some(v);
            }
            if let Some(v) = args.purity {
                config.purity = v;
            }
            config.validate()?;
            commands::dataset::run(&config, &args.pseudo, &args.mvd)
        }
        Command::FuseDemo(args) => {
            if let Some(v) = args.channels {
                config.channels = v;
            }
            if let Some(v) = args.sparse {
                config.sparse = v;
            }
            if let Some(v) = args.feat {
                config.feat = v;
            }
            config.validate()?;
            commands::fuse_demo::run(&config, &args.pseudo, &args.mvd)
        }
        Command::Evaluate(args) => {
            config.validate()?;
            commands::evaluate::run(&config, &args.pred, &args.gt)
        }
        Command::Synth(args) => {
            if let Some(v) = args.width {
                config.scene_width = v;
            }
            if let Some(v) = args.height {
                config.scene_height = v;
            }
            if let Some(v) = args.snr_db {
                config.snr_db = v;
            }
            config.validate()?;
            commands::synth::run(&config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
