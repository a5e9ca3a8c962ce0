mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use foveatec::{ErrorClass, FovealSize};

use config::FileConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, invalid parameters.
    Input(String),
    /// Network, wire protocol or session failure.
    Session(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Session(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Session(m) => f.write_str(m),
        }
    }
}

impl From<foveatec::Error> for CliError {
    fn from(e: foveatec::Error) -> Self {
        match e.class() {
            ErrorClass::Input => CliError::Input(e.to_string()),
            ErrorClass::Session => CliError::Session(e.to_string()),
        }
    }
}

macro_rules! via_lib_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                foveatec::Error::from(e).into()
            }
        }
    )*};
}

via_lib_error!(
    foveatec::FoveaError,
    foveatec::GazeError,
    foveatec::CodecError,
    foveatec::MetricsError,
    foveatec::AnalyticsError,
    foveatec::SessionError
);

#[derive(Debug, Parser)]
#[command(name = "foveatec", version, about = "Gaze-driven foveated video encoding toolkit")]
struct Cli {
    /// Settings file of `key = value` lines; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build one QP-offset map and write it as CSV (and optionally PGM).
    Qpmap(QpmapArgs),
    /// Encode frames into `.fvb` bitstreams.
    Encode(EncodeArgs),
    /// Decode `.fvb` bitstreams into a Y4M file.
    Decode(DecodeArgs),
    /// Per-frame PSNR and eye-weighted PSNR between two Y4M files.
    Metrics(MetricsArgs),
    /// Gaze-moment and change-rate CDFs and a density heatmap for a trace.
    Analyze(AnalyzeArgs),
    /// Run the gaze server and frame-tick encoder.
    Serve(ServeArgs),
    /// Replay a gaze trace to a server.
    Client(ClientArgs),
    /// Rate/quality sweep over QO_max and W.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct GeometryArgs {
    /// Frame width in pixels [default: 1366].
    #[arg(long)]
    pub width: Option<u32>,
    /// Frame height in pixels [default: 768].
    #[arg(long)]
    pub height: Option<u32>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FoveaArgs {
    /// Largest QP offset, applied far from the gaze [default: 16].
    #[arg(long)]
    pub qo_max: Option<f64>,
    /// Foveal size: `fw/8`, `0.125fw`, `170px` or `170` [default: fw/8].
    #[arg(long)]
    pub w: Option<FovealSize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Input Y4M file; synthetic noise frames are generated without it.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Number of synthetic frames to generate [default: 50].
    #[arg(long, conflicts_with = "input")]
    pub synthetic: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GazeArgs {
    /// Fixed gaze position `X,Y` in pixels.
    #[arg(long, value_parser = parse_point, conflicts_with = "trace")]
    pub gaze: Option<(f64, f64)>,
    /// Gaze trace CSV (`timestamp_us,x_px,y_px`) sampled per frame.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QpmapArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub fovea: FoveaArgs,
    /// Gaze position `X,Y` in pixels [default: frame centre].
    #[arg(long, value_parser = parse_point)]
    pub gaze: Option<(f64, f64)>,
    /// CSV output path [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write an 8-bit PGM rendering.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub fovea: FoveaArgs,
    #[command(flatten)]
    pub gaze: GazeArgs,
    /// Base quantizer step [default: 4].
    #[arg(long)]
    pub base_q: Option<f64>,
    /// Frame rate used to sample the trace [default: Y4M rate, else 50].
    #[arg(long)]
    pub fps: Option<f64>,
    /// Directory for `frame_NNNNN.fvb` and `stats.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// `.fvb` files, or one directory holding `frame_*.fvb`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output Y4M path.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Frame rate written to the Y4M header, `N` or `N:D`.
    #[arg(long, default_value = "50:1", value_parser = parse_rate)]
    pub fps: (u32, u32),
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference Y4M.
    #[arg(long)]
    pub reference: PathBuf,
    /// Degraded Y4M.
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub gaze: GazeArgs,
    #[command(flatten)]
    pub fovea: FoveaArgs,
    /// Eye-weight scale in pixels [default: W of the foveation settings].
    #[arg(long)]
    pub scale: Option<f64>,
    /// Frame rate used to sample the trace [default: reference Y4M rate].
    #[arg(long)]
    pub fps: Option<f64>,
    /// CSV output path [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Gaze trace CSV.
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Moment radius; repeatable [default: fw/8 and fw/4].
    #[arg(long)]
    pub radius: Vec<FovealSize>,
    /// Heatmap cell size in pixels [default: 16].
    #[arg(long)]
    pub cell: Option<u32>,
    /// Heatmap kernel bandwidth in pixels [default: width / 40].
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub fovea: FoveaArgs,
    /// Base quantizer step [default: 4].
    #[arg(long)]
    pub base_q: Option<f64>,
    /// Address to bind [default: 127.0.0.1].
    #[arg(long)]
    pub bind: Option<String>,
    /// Gaze port [default: 8555]; 0 picks a free port.
    #[arg(long)]
    pub port: Option<u16>,
    /// Encoded frame rate [default: Y4M rate, else 50].
    #[arg(long)]
    pub fps: Option<f64>,
    /// Frames to encode [default: 500].
    #[arg(long, conflicts_with = "duration")]
    pub frames: Option<usize>,
    /// Session length in seconds, as an alternative to --frames.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Age in milliseconds after which gaze counts as stale [default: 100].
    #[arg(long)]
    pub max_age_ms: Option<u64>,
    /// How long to wait for a gaze client, milliseconds [default: 10000].
    #[arg(long)]
    pub accept_timeout_ms: Option<u64>,
    /// Deterministic mode: drain the gaze stream, then encode on its timeline.
    #[arg(long)]
    pub virtual_clock: bool,
    /// Directory for bitstreams and session CSVs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClientArgs {
    /// Gaze trace CSV; a synthetic 900-sample trace is used without it.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Server address [default: 127.0.0.1:8555].
    #[arg(long)]
    pub endpoint: Option<String>,
    /// `realtime` (trace timestamps), `max`, or a rate in Hz [default: realtime].
    #[arg(long, value_parser = parse_pacing)]
    pub pacing: Option<PacingArg>,
    /// Send raw samples without the velocity-gated filter.
    #[arg(long)]
    pub no_filter: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PacingArg {
    RealTime,
    Max,
    Hz(f64),
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Gaze trace CSV sampled per frame [default: fixed centre gaze].
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// QO_max values [default: 0,4,8,12,16].
    #[arg(long, value_delimiter = ',')]
    pub qo_max: Vec<f64>,
    /// Foveal sizes [default: fw/8].
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<FovealSize>,
    /// Base quantizer step [default: 4].
    #[arg(long)]
    pub base_q: Option<f64>,
    /// Frame rate used to sample the trace [default: Y4M rate, else 50].
    #[arg(long)]
    pub fps: Option<f64>,
    /// CSV output path [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected X,Y")?;
    let num = |v: &str| -> Result<f64, String> {
        let n: f64 = v.trim().parse().map_err(|_| format!("not a number: {v:?}"))?;
        if n.is_finite() {
            Ok(n)
        } else {
            Err(format!("not finite: {v:?}"))
        }
    };
    Ok((num(x)?, num(y)?))
}

fn parse_rate(s: &str) -> Result<(u32, u32), String> {
    let (n, d) = s.split_once(':').unwrap_or((s, "1"));
    match (n.parse::<u32>(), d.parse::<u32>()) {
        (Ok(n), Ok(d)) if n > 0 && d > 0 => Ok((n, d)),
        _ => Err(format!("expected N or N:D, got {s:?}")),
    }
}

fn parse_pacing(s: &str) -> Result<PacingArg, String> {
    match s {
        "realtime" | "real-time" => Ok(PacingArg::RealTime),
        "max" | "max-speed" => Ok(PacingArg::Max),
        hz => match hz.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(PacingArg::Hz(v)),
            _ => Err(format!("expected realtime, max or a positive rate, got {s:?}")),
        },
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Qpmap(a) => commands::qpmap(a, &file),
        Command::Encode(a) => commands::encode(a, &file),
        Command::Decode(a) => commands::decode(a),
        Command::Metrics(a) => commands::metrics(a, &file),
        Command::Analyze(a) => commands::analyze(a, &file),
        Command::Serve(a) => commands::serve(a, &file),
        Command::Client(a) => commands::client(a, &file),
        Command::Bench(a) => commands::bench(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("foveatec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
