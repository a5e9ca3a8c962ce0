//! Gaze client: replays a trace over TCP with the chosen pacing.

use std::io::BufWriter;
use std::net::TcpStream;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::gaze::{FilterParams, GazeFilter, GazeTrace, GazeWriter};

use super::SessionError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// Follow the trace's own timestamps.
    RealTime,
    /// Fixed sample rate in Hz, ignoring trace timestamps.
    Rate(f64),
    /// No sleeping at all.
    MaxSpeed,
}

impl Pacing {
    /// Send offset of sample `i`, relative to the first one.
    fn offset(&self, trace: &GazeTrace, i: usize) -> Option<Duration> {
        match *self {
            Pacing::RealTime => {
                let t0 = trace.samples().first()?.timestamp_us;
                Some(Duration::from_micros(trace.samples()[i].timestamp_us - t0))
            }
            Pacing::Rate(hz) => Some(Duration::from_secs_f64(i as f64 / hz)),
            Pacing::MaxSpeed => None,
        }
    }
}

#[derive(Debug)]
pub struct SendReport {
    pub samples_sent: usize,
    pub elapsed: Duration,
    /// Replay duration the pacing asked for; zero at max speed.
    pub expected: Duration,
    /// `(elapsed - expected) / expected`; zero when nothing was expected.
    pub drift_fraction: f64,
    /// Set when the connection failed part way; the counts above cover what
    /// was sent before that.
    pub error: Option<SessionError>,
}

impl SendReport {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }
}

/// Connects to `endpoint` and streams `trace`, optionally through the gaze
/// filter. Failing to connect is an error; failure mid-replay is reported
/// in [`SendReport::error`].
pub fn run_client(
    trace: &GazeTrace,
    pacing: Pacing,
    endpoint: &str,
    filter: Option<FilterParams>,
) -> Result<SendReport, SessionError> {
    if let Pacing::Rate(hz) = pacing {
        if !(hz.is_finite() && hz > 0.0) {
            return Err(SessionError::Config(format!("send rate must be positive, got {hz}")));
        }
    }
    let mut filter = filter.map(GazeFilter::new).transpose()?;
    let stream = TcpStream::connect(endpoint).map_err(|source| SessionError::Connect {
        endpoint: endpoint.to_string(),
        source,
    })?;
    stream.set_nodelay(true)?;
    debug!("replaying {} gaze samples to {endpoint} ({pacing:?})", trace.len());

    let paced = pacing != Pacing::MaxSpeed;
    let start = Instant::now();
    let mut writer = GazeWriter::new(BufWriter::new(stream))?;
    let mut sent = 0;
    let mut error = None;
    for (i, raw) in trace.samples().iter().enumerate() {
        if let Some(due) = pacing.offset(trace, i) {
            let now = start.elapsed();
            if now < due {
                thread::sleep(due - now);
            }
        }
        let sample = match filter.as_mut() {
            Some(f) => f.push(raw)?,
            None => *raw,
        };
        let res = writer.send(&sample).and_then(|_| if paced { writer.flush() } else { Ok(()) });
        if let Err(e) = res {
            warn!("gaze replay stopped after {sent} samples: {e}");
            error = Some(e.into());
            break;
        }
        sent += 1;
    }
    if error.is_none() {
        if let Err(e) = writer.flush() {
            error = Some(e.into());
        }
    }
    let elapsed = start.elapsed();
    let expected = match trace.len() {
        0 => Duration::ZERO,
        n => pacing.offset(trace, n - 1).unwrap_or_default(),
    };
    let drift_fraction = if expected.is_zero() {
        0.0
    } else {
        (elapsed.as_secs_f64() - expected.as_secs_f64()) / expected.as_secs_f64()
    };
    Ok(SendReport {
        samples_sent: sent,
        elapsed,
        expected,
        drift_fraction,
        error,
    })
}
