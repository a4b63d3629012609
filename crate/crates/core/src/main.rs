use clap::{Parser, Subcommand};
use depthresp::cli::{self, ExperimentConfig, ExtractArgs};
use depthresp::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "depthresp",
    version,
    about = "Simulate breathing-torso depth videos, corrupt them with sensor noise models, \
             extract the chest RoI signal and analyze spectral SNR"
)]
struct Args {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the clean depth video described by a config file.
    Render {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply a noise-chain JSON file to a stored video.
    Corrupt {
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        chain: PathBuf,
        /// Replace every spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduce a stored video to a respiratory-signal CSV.
    Extract {
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        x0: Option<usize>,
        #[arg(long)]
        y0: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        scale: Option<f64>,
        /// Place the RoI inside the torso silhouette instead of the
        /// paper-sized window.
        #[arg(long)]
        chest_core: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// SNR of an extracted signal against a clean reference signal.
    Analyze {
        /// Noisy extracted-signal CSV.
        #[arg(long)]
        signal: PathBuf,
        /// Clean reference CSV (fixes the respiration rate).
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        band_hz: f64,
        #[arg(long, default_value_t = 0.1)]
        f0_min: f64,
        #[arg(long, default_value_t = 0.5)]
        f0_max: f64,
        /// Optional JSON report path (report always prints to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep grid: corrupt, extract and analyze every cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(args: Args) -> Result<(), Error> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::parameter("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::parameter(format!("thread pool: {e}")))?;
    }
    match args.command {
        Command::Render { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let out_dir = out
                .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
                .ok_or_else(|| Error::parameter("no output directory: give --out or out_dir"))?;
            let outcome = cli::cmd_render(&cfg, &out_dir)?;
            println!(
                "rendered {} frames ({:.2} s at {}x{}) into {}",
                outcome.frames,
                outcome.duration_s,
                outcome.width,
                outcome.height,
                outcome.dir.display()
            );
        }
        Command::Corrupt {
            video,
            chain,
            seed,
            out,
        } => {
            let frames = cli::cmd_corrupt(&video, &chain, seed, &out)?;
            println!("corrupted {} frames into {}", frames, out.display());
        }
        Command::Extract {
            video,
            x0,
            y0,
            width,
            height,
            scale,
            chest_core,
            out,
        } => {
            let rows = cli::cmd_extract(
                &video,
                &ExtractArgs {
                    x0,
                    y0,
                    width_px: width,
                    height_px: height,
                    scale,
                    chest_core,
                },
                &out,
            )?;
            println!("extracted {} samples into {}", rows, out.display());
        }
        Command::Analyze {
            signal,
            reference,
            band_hz,
            f0_min,
            f0_max,
            out,
        } => {
            let report = cli::cmd_analyze(&signal, &reference, band_hz, (f0_min, f0_max))?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::data(format!("report: {e}")))?;
            println!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, format!("{text}\n"))?;
            }
        }
        Command::Sweep {
            config,
            grid,
            out,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let outcome = cli::cmd_sweep(&cfg, &grid, &out)?;
            for failure in &outcome.failed_cells {
                eprintln!("warning: {failure}");
            }
            println!(
                "swept {} cells ({} summary rows) into {}",
                outcome.rows,
                outcome.summary_rows,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
