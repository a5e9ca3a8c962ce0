//! Gaze samples and everything that moves them from tracker to encoder:
//! the binary wire protocol, the velocity-gated smoothing filter, freshness
//! selection, the single-slot snapshot shared between receiver and encoder,
//! and recorded trace files.
//!
//! Coordinates are display pixels with the origin at the top-left corner and
//! y pointing down.

mod filter;
mod slot;
mod trace;
mod wire;

pub use filter::{latest_valid, light_filter, FilterParams, GazeFilter, LatestGaze};
pub use slot::GazeSlot;
pub use trace::{parse_trace_csv, write_trace_csv, GazeTrace, TRACE_HEADER};
pub use wire::{
    decode_sample, encode_sample, GazeWriter, StreamDecoder, RECORD_LEN, STREAM_MAGIC,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GazeError {
    #[error("gaze coordinate is not finite: ({0}, {1})")]
    NonFinite(f32, f32),
    #[error("framing error: expected {expected} bytes, got {got}")]
    Framing { expected: usize, got: usize },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("bad stream magic {0:02x?}")]
    BadMagic(Vec<u8>),
    #[error("invalid filter input: {0}")]
    FilterInput(String),
    #[error("invalid filter parameters: {0}")]
    Params(String),
    #[error("trace line {line}: {msg}")]
    Trace { line: u64, msg: String },
}

/// One timestamped gaze point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    /// Producer's monotonic clock, microseconds.
    pub timestamp_us: u64,
    pub x_px: f32,
    pub y_px: f32,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(timestamp_us: u64, x_px: f32, y_px: f32) -> Self {
        Self {
            timestamp_us,
            x_px,
            y_px,
            valid: true,
        }
    }

    pub fn invalid(timestamp_us: u64) -> Self {
        Self {
            timestamp_us,
            x_px: 0.0,
            y_px: 0.0,
            valid: false,
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x_px as f64, self.y_px as f64)
    }

    pub fn distance_to(&self, other: &GazeSample) -> f64 {
        let (ax, ay) = self.position();
        let (bx, by) = other.position();
        (ax - bx).hypot(ay - by)
    }

    pub fn is_finite(&self) -> bool {
        self.x_px.is_finite() && self.y_px.is_finite()
    }
}
