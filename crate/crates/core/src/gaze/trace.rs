//! Recorded gaze traces as CSV (`timestamp_us,x_px,y_px`).

use std::fmt::Write as _;

use crate::fovea::FrameGeometry;

use super::{GazeError, GazeSample};

pub const TRACE_HEADER: &str = "timestamp_us,x_px,y_px";

/// Time-ordered gaze samples recorded against one display geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeTrace {
    geometry: FrameGeometry,
    samples: Vec<GazeSample>,
}

impl GazeTrace {
    /// Fails unless timestamps are strictly increasing.
    pub fn new(geometry: FrameGeometry, samples: Vec<GazeSample>) -> Result<Self, GazeError> {
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].timestamp_us <= pair[0].timestamp_us {
                return Err(GazeError::Trace {
                    line: i as u64 + 2,
                    msg: format!(
                        "timestamp {} does not follow {}",
                        pair[1].timestamp_us, pair[0].timestamp_us
                    ),
                });
            }
        }
        Ok(Self { geometry, samples })
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Newest sample with timestamp at or before `t_us`.
    pub fn at(&self, t_us: u64) -> Option<&GazeSample> {
        let idx = self.samples.partition_point(|s| s.timestamp_us <= t_us);
        idx.checked_sub(1).map(|i| &self.samples[i])
    }

    /// Newest valid sample with timestamp at or before `t_us`.
    pub fn valid_at(&self, t_us: u64) -> Option<&GazeSample> {
        let idx = self.samples.partition_point(|s| s.timestamp_us <= t_us);
        self.samples[..idx].iter().rev().find(|s| s.valid)
    }

    /// Gaze position for frame `k` of a `fps` sequence starting at the
    /// first sample; falls back to the frame centre before any valid sample.
    pub fn gaze_for_frame(&self, k: usize, fps: f64) -> (f64, f64) {
        let Some(first) = self.samples.first() else {
            return self.geometry.center_px();
        };
        let t = first.timestamp_us + (k as f64 * 1e6 / fps).round() as u64;
        self.valid_at(t)
            .map_or_else(|| self.geometry.center_px(), |s| s.position())
    }

    pub fn into_samples(self) -> Vec<GazeSample> {
        self.samples
    }
}

pub fn parse_trace_csv(text: &str, geometry: FrameGeometry) -> Result<GazeTrace, GazeError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_err = |msg: String| GazeError::Trace { line: 1, msg };
    let headers = rdr.headers().map_err(|e| header_err(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != TRACE_HEADER.split(',').collect::<Vec<_>>() {
        return Err(header_err(format!("expected header {TRACE_HEADER:?}")));
    }
    let mut samples: Vec<GazeSample> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| GazeError::Trace {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| GazeError::Trace { line, msg };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let t: u64 = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad timestamp {:?}", &rec[0])))?;
        let coord = |i: usize| -> Result<f32, GazeError> {
            let v: f32 = rec[i]
                .parse()
                .map_err(|_| bad(format!("bad coordinate {:?}", &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("non-finite coordinate {:?}", &rec[i])))
            }
        };
        let s = GazeSample::new(t, coord(1)?, coord(2)?);
        if let Some(prev) = samples.last() {
            if s.timestamp_us <= prev.timestamp_us {
                return Err(bad(format!(
                    "timestamp {} does not follow {}",
                    s.timestamp_us, prev.timestamp_us
                )));
            }
        }
        samples.push(s);
    }
    Ok(GazeTrace { geometry, samples })
}

pub fn write_trace_csv(trace: &GazeTrace) -> String {
    let mut out = String::with_capacity(24 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in trace.samples() {
        let _ = writeln!(out, "{},{},{}", s.timestamp_us, s.x_px, s.y_px);
    }
    out
}
