//! Gaze-driven foveated video encoding.
//!
//! Maps a gaze position to a per-macroblock quantizer offset that grows with
//! distance from the gaze, encodes frames with a small reference transform
//! codec that honours those offsets, and measures the result with PSNR and
//! an eye-weighted PSNR. Around that core: a gaze wire protocol and filter,
//! gaze-trace analytics, and a loopback streaming harness.

pub mod analytics;
pub mod codec;
pub mod fovea;
pub mod gaze;
pub mod harness;
pub mod metrics;
pub mod pgm;
pub mod synth;

use thiserror::Error;

pub use analytics::{AnalyticsError, DensityGrid, GazeMoment};
pub use codec::{decode_frame, encode_frame, CodecConfig, CodecError, EncodeStats, Frame};
pub use fovea::{
    build_qp_map, qp_offset, FovealSize, FoveaError, FoveationConfig, FrameGeometry, MbIndex,
    QpOffsetMap, ResolvedFoveation,
};
pub use gaze::{GazeError, GazeSample, GazeTrace};
pub use harness::{ClockMode, SessionConfig, SessionError};
pub use metrics::{MetricsError, QualityReport};


/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Fovea(#[from] FoveaError),
    #[error(transparent)]
    Gaze(#[from] GazeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// Coarse failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad configuration, malformed files, invalid parameters.
    Input,
    /// Network, wire protocol or session failures.
    Session,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Gaze(e) => match e {
                GazeError::Framing { .. } | GazeError::Protocol(_) | GazeError::BadMagic(_) => {
                    ErrorClass::Session
                }
                _ => ErrorClass::Input,
            },
            Error::Session(e) => match e {
                SessionError::Config(_)
                | SessionError::Codec(_)
                | SessionError::Fovea(_)
                | SessionError::Metrics(_)
                | SessionError::Analytics(_)
                | SessionError::EmptySweep => ErrorClass::Input,
                _ => ErrorClass::Session,
            },
            _ => ErrorClass::Input,
        }
    }
}
