//! The `adl` command line.
//!
//! Every command returns its report text instead of printing it, so the
//! binary and the tests share one code path. Report text starts with the
//! effective configuration as `# config.*` lines.

mod config;

pub use config::{GtMode, RunConfig, Tunables, WindowSize, DENSE_COVERAGE};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    classify_edges, compute_metrics, disparity_to_pointcloud, downsample_gt, modal_statistics, write_ply_to,
    Intrinsics,
};
use crate::error::Error;
use crate::estimator::estimate_volume;
use crate::gt_model::build_gt_volume;
use crate::raster_io::{read_map, read_volume, write_map, write_mask_png, write_volume, DisparityMap};

#[derive(Debug, Parser)]
#[command(name = "adl", version, about = "Multi-modal ground-truth distributions and dominant-modal disparity estimation")]
pub struct Cli {
    /// TOML file with defaults for the tunables; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub tunables: Tunables,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the ground-truth distribution volume (ADLV) from a disparity map.
    GenGt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Where to write the modeled-pixel mask (defaults to `<output>.valid.png`).
        #[arg(long = "skip-mask")]
        skip_mask: Option<PathBuf>,
    },
    /// Turn a distribution volume into a disparity map (.pfm or .png).
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// EPE, >kpx and D1 of a prediction against ground truth, split by edge region.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Modal-count statistics of a distribution volume.
    Stats {
        #[arg(long)]
        volume: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Randomly drop ground-truth labels.
    Sparsify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Back-project a disparity map to an ASCII PLY point cloud.
    Cloud {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Focal length in pixels.
        #[arg(long)]
        focal: f64,
        /// Baseline in meters.
        #[arg(long)]
        baseline: f64,
        /// Principal point; defaults to the image centre.
        #[arg(long)]
        cx: Option<f64>,
        #[arg(long)]
        cy: Option<f64>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// `1` for I/O failures, `2` for usage errors, `3` for invalid inputs or settings.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::UnknownMethod(_)) => 2,
            CliError::Core(e) if e.is_io() => 1,
            CliError::Core(_) => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first) and runs the command, returning the report text.
pub fn run_from<I, T>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    use clap::error::ErrorKind;
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => Ok(e.to_string()),
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

pub fn run(cli: Cli) -> CliResult<String> {
    let file = match &cli.config {
        Some(path) => Tunables::from_toml_file(path)?,
        None => Tunables::default(),
    };
    let tunables = cli.tunables.or(file);
    let threads = tunables.threads.unwrap_or(8);
    if threads == 0 {
        return Err(Error::InvalidConfig("threads must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &tunables))
}

fn is_dense(tunables: &Tunables, gt: &DisparityMap) -> bool {
    match tunables.gt_mode.unwrap_or(GtMode::Auto) {
        GtMode::Dense => true,
        GtMode::Sparse => false,
        GtMode::Auto => gt.coverage() >= DENSE_COVERAGE,
    }
}

fn with_header(cfg: &RunConfig, body: &str) -> String {
    let mut out = cfg.header("# ");
    out.push_str(body);
    out
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn dispatch(command: &Command, tunables: &Tunables) -> CliResult<String> {
    match command {
        Command::GenGt {
            input,
            output,
            skip_mask,
        } => {
            let gt = read_map(input)?;
            let cfg = tunables.resolve(is_dense(tunables, &gt))?;
            let built = build_gt_volume(&gt, &cfg.window, &cfg.model);
            write_volume(&built.volume, output)?;
            let mask_path = skip_mask.clone().unwrap_or_else(|| {
                let mut p = output.as_os_str().to_owned();
                p.push(".valid.png");
                PathBuf::from(p)
            });
            write_mask_png(&built.modeled, gt.width(), gt.height(), &mask_path)?;

            let mut hist = [0usize; 3];
            for &k in built.modal_counts.iter().filter(|&&k| k > 0) {
                hist[k.min(3) - 1] += 1;
            }
            let edge = hist[1] + hist[2];
            let mut body = String::new();
            writeln!(body, "gen-gt.pixels={}", gt.len()).unwrap();
            writeln!(body, "gen-gt.skipped={}", built.skipped_count()).unwrap();
            writeln!(body, "gen-gt.nonedge.k1={}", hist[0]).unwrap();
            writeln!(body, "gen-gt.edge.k2={}", hist[1]).unwrap();
            writeln!(body, "gen-gt.edge.k3plus={}", hist[2]).unwrap();
            writeln!(body, "gen-gt.edge={edge}").unwrap();
            Ok(with_header(&cfg, &body))
        }
        Command::Estimate { input, output } => {
            let cfg = tunables.resolve(true)?;
            let loaded = read_volume(input)?;
            let map = estimate_volume(&loaded.volume, cfg.method)?;
            write_map(&map, output)?;
            let mut body = String::new();
            writeln!(body, "estimate.method={}", cfg.method).unwrap();
            writeln!(body, "estimate.pixels={}", map.len()).unwrap();
            writeln!(body, "estimate.valid={}", map.valid_count()).unwrap();
            writeln!(body, "estimate.unnormalized={}", loaded.unnormalized_pixels).unwrap();
            Ok(with_header(&cfg, &body))
        }
        Command::Eval { pred, gt, csv } => {
            let pred = read_map(pred)?;
            let gt = read_map(gt)?;
            let cfg = tunables.resolve(is_dense(tunables, &gt))?;
            if !pred.same_shape(&gt) {
                return Err(Error::DimensionMismatch(format!(
                    "prediction is {}x{}, ground truth is {}x{}",
                    pred.width(),
                    pred.height(),
                    gt.width(),
                    gt.height()
                ))
                .into());
            }
            let edges = classify_edges(&gt, &cfg.window);
            let report = compute_metrics(&pred, &gt, Some(&edges))?;
            if let Some(csv) = csv {
                write_text(csv, &report.to_csv())?;
            }
            Ok(with_header(&cfg, &report.to_string()))
        }
        Command::Stats { volume, gt, csv } => {
            let loaded = read_volume(volume)?;
            let gt = read_map(gt)?;
            let cfg = tunables.resolve(is_dense(tunables, &gt))?;
            let edges = classify_edges(&gt, &cfg.window);
            let stats = modal_statistics(&loaded.volume, &gt, &edges, cfg.peak_threshold)?;
            if let Some(csv) = csv {
                write_text(csv, &stats.to_csv())?;
            }
            Ok(with_header(&cfg, &stats.to_string()))
        }
        Command::Sparsify { input, output } => {
            let gt = read_map(input)?;
            let cfg = tunables.resolve(is_dense(tunables, &gt))?;
            let out = downsample_gt(&gt, cfg.keep, cfg.seed)?;
            write_map(&out, output)?;
            let mut body = String::new();
            writeln!(body, "sparsify.input_valid={}", gt.valid_count()).unwrap();
            writeln!(body, "sparsify.output_valid={}", out.valid_count()).unwrap();
            Ok(with_header(&cfg, &body))
        }
        Command::Cloud {
            input,
            output,
            focal,
            baseline,
            cx,
            cy,
        } => {
            let map = read_map(input)?;
            let cfg = tunables.resolve(is_dense(tunables, &map))?;
            let cam = Intrinsics {
                focal: *focal,
                baseline: *baseline,
                cx: cx.unwrap_or((map.width() as f64 - 1.0) / 2.0),
                cy: cy.unwrap_or((map.height() as f64 - 1.0) / 2.0),
            };
            let points = disparity_to_pointcloud(&map, &cam)?;
            let mut ply = Vec::new();
            write_ply_to(&points, &mut ply).map_err(|e| Error::io(output, e))?;
            let mut comments = cfg.header("comment ");
            writeln!(
                comments,
                "comment camera.focal={focal} camera.baseline={baseline} camera.cx={} camera.cy={}",
                cam.cx, cam.cy
            )
            .unwrap();
            let out = String::from_utf8(ply)
                .expect("ply is ascii")
                .replacen("element vertex", &format!("{comments}element vertex"), 1);
            write_text(output, &out)?;
            let mut body = String::new();
            writeln!(body, "cloud.points={}", points.len()).unwrap();
            Ok(with_header(&cfg, &body))
        }
    }
}
