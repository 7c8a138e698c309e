//! `cabinsim` command-line tool.

mod commands;
mod error;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use cabinsim::dataset::{Condition, SetupKind, SourcePosition};
use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "cabinsim", version, about = "In-car microphone signal synthesis")]
pub struct Cli {
    /// Dataset root.
    #[arg(long, global = true, env = "CAVE_DATASET_ROOT")]
    pub root: Option<PathBuf>,
    /// More output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a scene to a multichannel WAV and a sidecar JSON.
    Synth(SynthArgs),
    /// Noise level and SNR at a reference microphone.
    Metrics(MetricsArgs),
    /// Check a dataset for missing combinations and damaged files.
    Validate(ValidateArgs),
    /// Derive a sensitivity offset from a calibration recording.
    Calibrate(CalibrateArgs),
    /// Write the synthetic fixture dataset.
    Fixture(FixtureArgs),
    /// Export steering vectors of a microphone array.
    Steering(SteeringArgs),
}

#[derive(Debug, Args, Default, Clone)]
#[command(allow_negative_numbers = true)]
pub struct SceneFlags {
    /// Scene spec JSON; flags override its values.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub car: Option<String>,
    #[arg(long)]
    pub setup: Option<SetupKind>,
    /// Talker position.
    #[arg(long)]
    pub p: Option<SourcePosition>,
    /// Speech effort, dBA at 1 m.
    #[arg(long = "ls")]
    pub ls: Option<f64>,
    /// Window state 0..=3.
    #[arg(long)]
    pub w: Option<i64>,
    /// Dry speech WAV.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Audio-program level, dBA at the reference microphone.
    #[arg(long = "la")]
    pub la: Option<f64>,
    /// Audio-program WAV.
    #[arg(long)]
    pub z: Option<PathBuf>,
    /// Speed in km/h.
    #[arg(long = "speed", alias = "s")]
    pub speed: Option<i64>,
    /// Ventilation level 1..=3.
    #[arg(long = "vent", alias = "l")]
    pub vent: Option<i64>,
    /// Microphone indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<usize>>,
    #[arg(long)]
    pub target_rate: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scene: SceneFlags,
    /// Output WAV (the sidecar gets a .json extension).
    #[arg(short, long, default_value = "scene.wav")]
    pub out: PathBuf,
    /// Also write S, A, N and V as separate WAVs.
    #[arg(long)]
    pub emit_components: bool,
    /// Synthesize every *.json spec in a directory, in parallel.
    #[arg(long, conflicts_with = "spec")]
    pub batch: Option<PathBuf>,
    /// Output directory for --batch (defaults to the spec directory).
    #[arg(long, requires = "batch")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MetricsArgs {
    /// Every condition of the car's grid.
    #[arg(long, conflicts_with = "condition", required_unless_present = "condition")]
    pub table: bool,
    /// A single condition, e.g. `speed=70,w=0` or `speed=0,w=0,vent=2`.
    #[arg(long)]
    pub condition: Option<Condition>,
    #[arg(long)]
    pub car: Option<String>,
    #[arg(long, default_value = "array")]
    pub setup: SetupKind,
    #[arg(long, default_value = "driver")]
    pub p: SourcePosition,
    #[arg(long = "ls", default_value_t = 60.0)]
    pub ls: f64,
    /// Microphone (defaults to the setup's reference microphone).
    #[arg(long)]
    pub channel: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Clipping threshold as a fraction of full scale.
    #[arg(long)]
    pub clip_threshold: Option<f64>,
    /// Minimum run of clipped samples.
    #[arg(long)]
    pub clip_min_run: Option<usize>,
    #[arg(long, value_enum, default_value_t = ValidateFormat::Text)]
    pub format: ValidateFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ValidateFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CalibrateArgs {
    /// Calibration recording (WAV).
    #[arg(long)]
    pub recording: PathBuf,
    /// Microphone whose offset is updated.
    #[arg(long)]
    pub channel: usize,
    /// Channel of the recording to measure (defaults to --channel, or 0 for
    /// mono recordings).
    #[arg(long)]
    pub recording_channel: Option<usize>,
    /// Sound-level-meter reading in dBA.
    #[arg(long)]
    pub ref_dba: f64,
    #[arg(long)]
    pub car: Option<String>,
    #[arg(long)]
    pub setup: SetupKind,
    /// Print the offset without touching the manifest.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Target directory (defaults to --root).
    pub dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SteeringArgs {
    /// Frequencies in Hz: a list `500,1000` or a range `start:stop:step`.
    #[arg(long)]
    pub freqs: String,
    /// Azimuths in degrees: a list or a range `start:stop:step`.
    #[arg(long)]
    pub azimuths: String,
    /// Take the geometry from this car's array setup.
    #[arg(long, conflicts_with_all = ["mics", "radius"])]
    pub car: Option<String>,
    /// Uniform circular array: number of microphones.
    #[arg(long, default_value_t = 8)]
    pub mics: usize,
    /// Uniform circular array: radius in metres.
    #[arg(long, default_value_t = 0.05)]
    pub radius: f64,
    #[arg(long, default_value_t = cabinsim::array::DEFAULT_SPEED_OF_SOUND)]
    pub speed_of_sound: f64,
    #[arg(short, long, default_value = "steering.bin")]
    pub out: PathBuf,
}

/// Diagnostic output gated by verbosity.
#[derive(Debug, Clone, Copy)]
pub struct Log {
    level: i8,
}

impl Log {
    pub fn info(&self, msg: impl std::fmt::Display) {
        if self.level >= 0 {
            eprintln!("{msg}");
        }
    }

    pub fn debug(&self, msg: impl std::fmt::Display) {
        if self.level >= 1 {
            eprintln!("{msg}");
        }
    }
}

impl Cli {
    pub fn log(&self) -> Log {
        Log { level: if self.quiet { -1 } else { self.verbose as i8 } }
    }

    pub fn root(&self) -> Result<&PathBuf, CliError> {
        self.root
            .as_ref()
            .ok_or_else(|| CliError::usage("no dataset root: pass --root or set CAVE_DATASET_ROOT"))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(args) => synth::run(cli, args),
        Command::Metrics(args) => commands::metrics(cli, args),
        Command::Validate(args) => commands::validate(cli, args),
        Command::Calibrate(args) => commands::calibrate(cli, args),
        Command::Fixture(args) => commands::fixture(cli, args),
        Command::Steering(args) => commands::steering(cli, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Findings(n)) => {
            cli.log().debug(format!("{n} findings"));
            ExitCode::from(error::EXIT_FINDINGS as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
