//! Loopback streaming harness: a gaze client replaying traces, a server that
//! turns the freshest gaze into an offset map and encodes a frame per tick,
//! latency instrumentation and the parameter sweep used for rate/quality
//! trends.

mod client;
mod latency;
mod server;
mod sweep;

use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::analytics::AnalyticsError;
use crate::codec::{CodecConfig, CodecError};
use crate::fovea::{FoveaError, FoveationConfig, FrameGeometry};
use crate::gaze::{FilterParams, GazeError};
use crate::metrics::MetricsError;

pub use client::{run_client, Pacing, SendReport};
pub use latency::{measure_latency, LatencyReport, MIN_LATENCY_RECORDS};
pub use server::{
    bind_gaze_listener, run_server, LatencyRecord, ReceivedSample, SessionSummary, TickRecord,
};
pub use sweep::{bench_sweep, quantile, write_sweep_csv, SweepRow, SweepSpec};

pub const DEFAULT_VIDEO_PORT: u16 = 8554;
/// Gaze channel sits one port above the video port.
pub const DEFAULT_GAZE_PORT: u16 = DEFAULT_VIDEO_PORT + 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("cannot bind gaze listener: {0}")]
    Bind(std::io::Error),
    #[error("cannot connect to {endpoint}: {source}")]
    Connect {
        endpoint: String,
        source: std::io::Error,
    },
    #[error("gaze stream error: {0}")]
    Protocol(#[from] GazeError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid session configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Fovea(#[from] FoveaError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("need at least {need} latency records, have {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("sweep has no cells")]
    EmptySweep,
}

/// How the server measures time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMode {
    /// Frame ticks follow the wall clock; gaze is consumed as it arrives.
    Wall,
    /// The whole gaze stream is received first and treated as arriving at
    /// its own timestamps; frame ticks are spaced on that timeline. Output
    /// is a pure function of (trace, frames, configuration).
    Virtual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub geometry: FrameGeometry,
    pub foveation: FoveationConfig,
    pub codec: CodecConfig,
    pub bind_addr: IpAddr,
    pub gaze_port: u16,
    /// Gaze samples per second sent by the client when pacing by rate.
    pub pacing_hz: f64,
    pub fps: f64,
    pub frame_count: usize,
    pub filter: FilterParams,
    pub clock: ClockMode,
    /// How long the server waits for a gaze client before encoding without
    /// one (virtual clock) or giving up on accepting (wall clock).
    pub accept_timeout: Duration,
    /// Where to write `frame_NNNNN.fvb`, if anywhere.
    pub out_dir: Option<PathBuf>,
    /// Keep every bitstream in the summary.
    pub retain_bitstreams: bool,
}

impl SessionConfig {
    pub fn new(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            foveation: FoveationConfig::default(),
            codec: CodecConfig::default(),
            bind_addr: IpAddr::V4(Ipv4Addr::LOCALHOST),
            gaze_port: DEFAULT_GAZE_PORT,
            pacing_hz: 90.0,
            fps: 50.0,
            frame_count: 500,
            filter: FilterParams::default(),
            clock: ClockMode::Wall,
            accept_timeout: Duration::from_secs(10),
            out_dir: None,
            retain_bitstreams: false,
        }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.fps) {
            return Err(SessionError::Config(format!("fps must be positive, got {}", self.fps)));
        }
        if !positive(self.pacing_hz) {
            return Err(SessionError::Config(format!(
                "pacing must be positive, got {}",
                self.pacing_hz
            )));
        }
        if self.frame_count == 0 {
            return Err(SessionError::Config("frame count must be positive".into()));
        }
        let cfg_err = |e: &dyn std::fmt::Display| SessionError::Config(e.to_string());
        self.codec.validate().map_err(|e| cfg_err(&e))?;
        self.filter.validate().map_err(|e| cfg_err(&e))?;
        self.foveation.resolve(&self.geometry).map_err(|e| cfg_err(&e))?;
        Ok(())
    }

    /// Microseconds between frame ticks `k` and 0.
    pub fn tick_offset_us(&self, k: usize) -> u64 {
        (k as f64 * 1e6 / self.fps).round() as u64
    }

    /// Frame count for a session of `seconds`.
    pub fn frames_for_duration(fps: f64, seconds: f64) -> usize {
        (fps * seconds).round() as usize
    }
}
