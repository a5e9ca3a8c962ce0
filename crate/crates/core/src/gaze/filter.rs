//! Velocity-gated exponential smoothing and freshness selection.
//!
//! Slow movement (fixation jitter, micro-saccades) is smoothed with weight
//! `alpha_min` on the new sample; once the apparent velocity reaches `v_ref`
//! the new sample passes through unchanged.

use super::{GazeError, GazeSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Weight of the incoming sample at zero velocity, in `(0, 1]`.
    pub alpha_min: f64,
    /// Velocity at which smoothing fully releases, pixels per second.
    pub v_ref_px_per_s: f64,
    /// Samples older than this are reported stale.
    pub max_age_us: u64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            alpha_min: 0.2,
            v_ref_px_per_s: 1000.0,
            max_age_us: 100_000,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), GazeError> {
        if !(self.alpha_min > 0.0 && self.alpha_min <= 1.0) {
            return Err(GazeError::Params(format!(
                "alpha_min must be in (0, 1], got {}",
                self.alpha_min
            )));
        }
        if !(self.v_ref_px_per_s > 0.0 && self.v_ref_px_per_s.is_finite()) {
            return Err(GazeError::Params(format!(
                "v_ref must be positive, got {}",
                self.v_ref_px_per_s
            )));
        }
        Ok(())
    }
}

/// Blends `new_in` towards `prev_out` depending on the apparent velocity
/// between them. Invalid input samples are returned unchanged.
pub fn light_filter(
    prev_out: &GazeSample,
    new_in: &GazeSample,
    p: &FilterParams,
) -> Result<GazeSample, GazeError> {
    if new_in.timestamp_us <= prev_out.timestamp_us {
        return Err(GazeError::FilterInput(format!(
            "timestamp {} does not follow {}",
            new_in.timestamp_us, prev_out.timestamp_us
        )));
    }
    if !new_in.valid || !prev_out.valid {
        return Ok(*new_in);
    }
    let dt_s = (new_in.timestamp_us - prev_out.timestamp_us) as f64 * 1e-6;
    let v = prev_out.distance_to(new_in) / dt_s;
    let alpha = (v / p.v_ref_px_per_s).clamp(p.alpha_min, 1.0);
    if alpha >= 1.0 {
        return Ok(*new_in);
    }
    let (px, py) = prev_out.position();
    let (nx, ny) = new_in.position();
    Ok(GazeSample {
        timestamp_us: new_in.timestamp_us,
        x_px: (alpha * nx + (1.0 - alpha) * px) as f32,
        y_px: (alpha * ny + (1.0 - alpha) * py) as f32,
        valid: true,
    })
}

/// Stateful wrapper around [`light_filter`] for a single gaze stream.
#[derive(Debug, Clone)]
pub struct GazeFilter {
    params: FilterParams,
    last: Option<GazeSample>,
}

impl GazeFilter {
    pub fn new(params: FilterParams) -> Result<Self, GazeError> {
        params.validate()?;
        Ok(Self { params, last: None })
    }

    pub fn push(&mut self, s: &GazeSample) -> Result<GazeSample, GazeError> {
        let out = match (&self.last, s.valid) {
            (Some(prev), true) => light_filter(prev, s, &self.params)?,
            _ => *s,
        };
        if out.valid {
            self.last = Some(out);
        }
        Ok(out)
    }
}

/// Newest valid sample and whether it has exceeded the age limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatestGaze {
    pub sample: GazeSample,
    pub stale: bool,
}

/// Picks the newest valid sample by timestamp, independent of arrival order.
pub fn latest_valid(buffer: &[GazeSample], now_us: u64, p: &FilterParams) -> Option<LatestGaze> {
    let sample = *buffer
        .iter()
        .filter(|s| s.valid)
        .max_by_key(|s| s.timestamp_us)?;
    let age = now_us.saturating_sub(sample.timestamp_us);
    Some(LatestGaze {
        sample,
        stale: age > p.max_age_us,
    })
}
