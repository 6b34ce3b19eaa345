//! `vidseal`: hash, compare, simulate and evaluate frame-directory videos.
//!
//! Exit status: 0 clean, 1 tampering detected, 2 bad input or configuration,
//! 3 output could not be written.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vidseal_core::imaging::FrameFormat;
use vidseal_core::{Mode, TileSize};

use config::{ConfigFile, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const INPUT: u8 = 2;
    pub const OUTPUT: u8 = 3;

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: Self::INPUT,
            message: message.into(),
        }
    }

    pub fn output(message: impl Into<String>) -> Self {
        Self {
            code: Self::OUTPUT,
            message: message.into(),
        }
    }

    /// Errors raised while reading inputs or validating configuration.
    pub fn from_core(e: vidseal_core::Error) -> Self {
        Self::input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "vidseal", version, about = "Frame-level tamper detection for videos stored as frame directories")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Grid side: each extended frame holds n*n frames [default: 8]
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Decision threshold on the Hamming distance [default: 23]
    #[arg(long, global = true)]
    d: Option<u32>,
    /// Decision mode [default: dual]
    #[arg(long, global = true)]
    mode: Option<Mode>,
    /// Tile size inside an extended frame, WxH [default: 96x54]
    #[arg(long, global = true)]
    tile: Option<TileSize>,
    /// Seed for simulation and synthesis
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores (falls back to VIDSEAL_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file with default values for the flags above
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Png,
    Ppm,
}

impl From<FormatArg> for FrameFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Png => FrameFormat::Png,
            FormatArg::Ppm => FrameFormat::Ppm,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthArg {
    Gradient,
    Noise,
    White,
    Black,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hash a reference video into a .vhr record
    Hash {
        frames: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Compare a query video against a reference record
    Detect {
        record: PathBuf,
        frames: PathBuf,
        /// JSON report path; printed to stdout when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write the per-block table as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tamper and distort a video according to a JSON spec
    Simulate {
        frames: PathBuf,
        spec: PathBuf,
        /// Output frame directory; truth.json is written inside it
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "png")]
        format: FormatArg,
    },
    /// Score labeled query sets against a record and sweep the threshold
    Eval {
        record: PathBuf,
        manifest: PathBuf,
        /// Sweep CSV path
        #[arg(long, short)]
        out: PathBuf,
        /// Write the calibrated threshold as a config file
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Distance of a black frame at every grid position of a white block
    Heatmap {
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Generate a synthetic video
    Synth {
        #[arg(long, value_enum, default_value = "gradient")]
        kind: SynthArg,
        #[arg(long, default_value_t = 192)]
        frames: usize,
        /// Frame size, WxH
        #[arg(long, default_value = "320x180")]
        size: TileSize,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "png")]
        format: FormatArg,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let file = cli.common.config.as_deref().map(ConfigFile::load).transpose()?;
    let flags = Overrides {
        n: cli.common.n,
        d: cli.common.d,
        mode: cli.common.mode,
        tile: cli.common.tile,
        seed: cli.common.seed,
        threads: cli.common.threads,
    };
    let config = RunConfig::resolve(&flags, file.as_ref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Hash { frames, out } => commands::hash(&frames, &out, &config),
        Command::Detect {
            record,
            frames,
            out,
            csv,
        } => commands::detect(&record, &frames, out.as_deref(), csv.as_deref(), &config),
        Command::Simulate {
            frames,
            spec,
            out,
            format,
        } => commands::simulate(&frames, &spec, &out, format.into(), &config),
        Command::Eval {
            record,
            manifest,
            out,
            calibration,
        } => commands::eval(&record, &manifest, &out, calibration.as_deref(), &config),
        Command::Heatmap { out } => commands::heatmap(&out, &config),
        Command::Synth {
            kind,
            frames,
            size,
            out,
            format,
        } => {
            let kind = match kind {
                SynthArg::Gradient => vidseal_core::tamper_sim::SynthKind::GradientMotion,
                SynthArg::Noise => vidseal_core::tamper_sim::SynthKind::NoiseTexture,
                SynthArg::White => vidseal_core::tamper_sim::SynthKind::Solid { rgb: [255; 3] },
                SynthArg::Black => vidseal_core::tamper_sim::SynthKind::Solid { rgb: [0; 3] },
            };
            commands::synth(kind, frames, size, &out, format.into(), &config)
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("vidseal: {e}");
            ExitCode::from(e.code)
        }
    }
}
