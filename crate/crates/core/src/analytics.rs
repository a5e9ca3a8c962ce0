//! Batch analyses of recorded gaze traces: gaze moments, gaze change rate,
//! empirical CDFs and Gaussian KDE heatmaps.
//!
//! A gaze moment is a maximal run of consecutive samples that stay within a
//! fixed radius of the run's first sample. Moments partition the trace: the
//! first sample outside the circle anchors the next moment.

use std::io::{self, Write};

use thiserror::Error;

use crate::fovea::FrameGeometry;
use crate::gaze::GazeTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("samples {0} and {1} share a timestamp")]
    ZeroInterval(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    Param(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeMoment {
    pub start_us: u64,
    pub end_us: u64,
    pub anchor_px: (f64, f64),
    /// Index of the anchoring sample in the trace.
    pub first_index: usize,
    pub sample_count: usize,
}

impl GazeMoment {
    pub fn duration_us(&self) -> u64 {
        self.end_us - self.start_us
    }
}

pub fn gaze_moments(trace: &GazeTrace, radius_px: f64) -> Result<Vec<GazeMoment>, AnalyticsError> {
    if !(radius_px > 0.0 && radius_px.is_finite()) {
        return Err(AnalyticsError::Param(format!("radius must be positive, got {radius_px}")));
    }
    let samples = trace.samples();
    let mut moments = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        let anchor = &samples[i];
        let mut j = i + 1;
        while j < samples.len() && samples[j].distance_to(anchor) <= radius_px {
            j += 1;
        }
        moments.push(GazeMoment {
            start_us: anchor.timestamp_us,
            end_us: samples[j - 1].timestamp_us,
            anchor_px: anchor.position(),
            first_index: i,
            sample_count: j - i,
        });
        i = j;
    }
    Ok(moments)
}

/// Pixel speed between consecutive samples, stamped with the later sample's
/// timestamp.
pub fn gaze_change_rate(trace: &GazeTrace) -> Result<Vec<(u64, f64)>, AnalyticsError> {
    let samples = trace.samples();
    if samples.len() < 2 {
        return Err(AnalyticsError::TooFewSamples {
            need: 2,
            got: samples.len(),
        });
    }
    samples
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let dt_us = pair[1].timestamp_us.saturating_sub(pair[0].timestamp_us);
            if dt_us == 0 {
                return Err(AnalyticsError::ZeroInterval(i, i + 1));
            }
            let dt_s = dt_us as f64 * 1e-6;
            Ok((pair[1].timestamp_us, pair[0].distance_to(&pair[1]) / dt_s))
        })
        .collect()
}

/// Right-continuous step CDF: one `(value, fraction <= value)` point per
/// distinct value, ascending.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    Ok(out)
}

/// Gaze density on a grid of square cells, normalized so that
/// `Σ values · cell_area = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub geometry: FrameGeometry,
    pub cell_px: u32,
    pub bandwidth_px: f64,
    pub cols: u32,
    pub rows: u32,
    /// Row-major density per square pixel.
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn cell_area(&self) -> f64 {
        (self.cell_px as f64).powi(2)
    }

    pub fn get(&self, col: u32, row: u32) -> f64 {
        self.values[(row * self.cols + col) as usize]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// Cell with the highest density.
    pub fn argmax(&self) -> (u32, u32) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        (i as u32 % self.cols, i as u32 / self.cols)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.values.chunks(self.cols as usize) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// 8-bit rendering with the densest cell at 255.
    pub fn write_pgm<W: Write>(&self, out: W) -> io::Result<()> {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        let px: Vec<u8> = self
            .values
            .iter()
            .map(|v| (v * scale).round().clamp(0.0, 255.0) as u8)
            .collect();
        crate::pgm::write_pgm(out, self.cols, self.rows, &px)
    }
}

/// Default KDE bandwidth: a fortieth of the frame width.
pub fn default_bandwidth(geom: &FrameGeometry) -> f64 {
    geom.width_px() as f64 / 40.0
}

/// Isotropic Gaussian kernel density estimate evaluated at cell centres.
pub fn heatmap(trace: &GazeTrace, cell_px: u32, bandwidth_px: f64) -> Result<DensityGrid, AnalyticsError> {
    let samples: Vec<_> = trace.samples().iter().filter(|s| s.valid).collect();
    if samples.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    if cell_px == 0 {
        return Err(AnalyticsError::Param("cell size must be positive".into()));
    }
    if !(bandwidth_px > 0.0 && bandwidth_px.is_finite()) {
        return Err(AnalyticsError::Param(format!("bandwidth must be positive, got {bandwidth_px}")));
    }
    let geom = *trace.geometry();
    let cols = geom.width_px().div_ceil(cell_px);
    let rows = geom.height_px().div_ceil(cell_px);
    let inv = 1.0 / (2.0 * bandwidth_px * bandwidth_px);
    let centres = |n: u32| -> Vec<f64> { (0..n).map(|i| (i as f64 + 0.5) * cell_px as f64).collect() };
    let (cx, cy) = (centres(cols), centres(rows));
    let mut values = vec![0.0; cols as usize * rows as usize];
    let mut kx = vec![0.0; cols as usize];
    for s in &samples {
        let (sx, sy) = s.position();
        for (k, &x) in kx.iter_mut().zip(&cx) {
            *k = (-(x - sx).powi(2) * inv).exp();
        }
        for (row, &y) in values.chunks_mut(cols as usize).zip(&cy) {
            let ky = (-(y - sy).powi(2) * inv).exp();
            if ky == 0.0 {
                continue;
            }
            for (v, &k) in row.iter_mut().zip(&kx) {
                *v += k * ky;
            }
        }
    }
    // normalize over the frame; kernel mass falling off-frame is folded back in
    let total = values.iter().sum::<f64>() * (cell_px as f64).powi(2);
    if !(total > 0.0) {
        return Err(AnalyticsError::Param(
            "bandwidth too small for the grid: density vanishes at every cell centre".into(),
        ));
    }
    values.iter_mut().for_each(|v| *v /= total);
    Ok(DensityGrid {
        geometry: geom,
        cell_px,
        bandwidth_px,
        cols,
        rows,
        values,
    })
}
