//! `tileprop`: synthetic scenes, tiled proposal runs, AR evaluation, overlays.

mod commands;
mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tileprop::tiling::Dims;

#[derive(Debug, Parser)]
#[command(name = "tileprop", version, about = "Tiled small-object proposals and Average Recall evaluation")]
struct Cli {
    /// Worker threads (0 = all cores). Output does not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic orchard scenes (PPM image + 16-bit PGM instance map).
    Synth(SynthArgs),
    /// Produce ranked proposals for every scene.
    Run(RunArgs),
    /// Compute the AR table for a proposal directory.
    Eval(EvalArgs),
    /// Render matched (filled) and missed (red outline) objects.
    Overlay(OverlayArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub count: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1280)]
    pub width: u32,
    #[arg(long, default_value_t = 720)]
    pub height: u32,
    #[arg(long, default_value_t = 45)]
    pub apples: u32,
    #[arg(long, default_value_t = 0.51)]
    pub xs_fraction: f64,
    #[arg(long, default_value_t = 40)]
    pub leaves: u32,
    #[arg(long, default_value_t = 4.0)]
    pub radius_min: f64,
    #[arg(long, default_value_t = 24.0)]
    pub radius_max: f64,
    #[arg(long, default_value_t = 16)]
    pub min_visible: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Whole,
    Tiled,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// attentionmask | attentionmask-4-16 | fastmask
    #[arg(long, default_value = "attentionmask")]
    pub detector: String,
    /// Read tile-local or whole-image proposals from `<DIR>/<scene>.jsonl`
    /// instead of simulating.
    #[arg(long, value_name = "DIR")]
    pub exchange: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Tiled)]
    pub mode: Mode,
    #[arg(long, default_value = "320x240")]
    pub tile: String,
    #[arg(long, default_value = "160x120")]
    pub stride: String,
    #[arg(long, default_value_t = 0.7)]
    pub nms_iou: f64,
    #[arg(long, default_value_t = 100)]
    pub top_k: usize,
    /// `key = value` detector overrides, applied before the flags below.
    #[arg(long, value_name = "FILE")]
    pub detector_config: Option<PathBuf>,
    /// Detector input resolution, WxH.
    #[arg(long)]
    pub input: Option<String>,
    /// Comma-separated pyramid levels, e.g. 4,8,16.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub fill_min: Option<f64>,
    #[arg(long)]
    pub fill_max: Option<f64>,
    #[arg(long)]
    pub jitter: Option<u32>,
    #[arg(long)]
    pub objectness_noise: Option<f64>,
    /// Seed of the simulated detector.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub proposals: PathBuf,
    /// Report path; `.txt`, `.json` and `.csv` siblings are all written.
    #[arg(long)]
    pub out: PathBuf,
    /// Row label; defaults to the run manifest's detector/mode.
    #[arg(long)]
    pub system: Option<String>,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub proposals: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Only the first K proposals take part in matching.
    #[arg(long, default_value_t = 100)]
    pub top_k: usize,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values: exit code 1.
    Usage(String),
    /// Bad or missing data: exit code 2.
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn to_json(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Data(m) => ("data", m),
        };
        serde_json::json!({ "error": kind, "message": msg.trim_end() }).to_string()
    }
}

impl From<tileprop::Error> for CliError {
    fn from(e: tileprop::Error) -> Self {
        match e {
            tileprop::Error::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub fn parse_dims(s: &str, flag: &str) -> Result<Dims, CliError> {
    s.parse()
        .map_err(|_| CliError::Usage(format!("--{flag}: expected WxH, got {s:?}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Usage(e.render().to_string());
            let _ = writeln!(std::io::stderr(), "{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let err = CliError::Usage(format!("--jobs: {e}"));
            let _ = writeln!(std::io::stderr(), "{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Run(a) => commands::run(a),
        Command::Eval(a) => commands::eval(a),
        Command::Overlay(a) => commands::overlay(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let _ = writeln!(std::io::stderr(), "{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
