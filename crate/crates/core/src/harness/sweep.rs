//! Offline rate/quality sweep over (QO_max, W) cells.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::codec::{decode_frame, encode_frame, CodecConfig, Frame};
use crate::fovea::{build_qp_map, FovealSize, FoveationConfig};
use crate::gaze::GazeTrace;
use crate::metrics::evaluate;

use super::SessionError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub qo_max: Vec<f64>,
    pub w: Vec<FovealSize>,
}

impl SweepSpec {
    fn cells(&self) -> impl Iterator<Item = FoveationConfig> + '_ {
        self.qo_max
            .iter()
            .flat_map(move |&q| self.w.iter().map(move |&w| FoveationConfig::new(q, w)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub qo_max: f64,
    pub w: FovealSize,
    pub w_px: f64,
    pub frames: usize,
    pub mean_bits: f64,
    pub median_bits: f64,
    pub q1_bits: f64,
    pub q3_bits: f64,
    pub iqr_bits: f64,
    pub mean_psnr_db: f64,
    pub mean_ewpsnr_db: f64,
}

/// Linear-interpolated quantile of unsorted `values`, `q` in `[0, 1]`.
/// Returns NaN for an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Encodes every frame under every cell of `spec`, decoding to measure PSNR
/// and EWPSNR (weights scaled to the cell's W). Without a trace the gaze is
/// fixed at the frame centre.
pub fn bench_sweep(
    frames: &[Frame],
    trace: Option<&GazeTrace>,
    fps: f64,
    spec: &SweepSpec,
    codec: &CodecConfig,
) -> Result<Vec<SweepRow>, SessionError> {
    if spec.qo_max.is_empty() || spec.w.is_empty() || frames.is_empty() {
        return Err(SessionError::EmptySweep);
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(SessionError::Config(format!("fps must be positive, got {fps}")));
    }
    codec.validate()?;
    let geom = *frames[0].geometry();
    if frames.iter().any(|f| *f.geometry() != geom) {
        return Err(SessionError::Config("frames differ in geometry".into()));
    }

    let mut rows = Vec::new();
    for cell in spec.cells() {
        let resolved = cell.resolve(&geom)?;
        let per_frame: Vec<(f64, f64, f64)> = frames
            .par_iter()
            .enumerate()
            .map(|(k, frame)| -> Result<_, SessionError> {
                let gaze = trace.map_or_else(|| geom.center_px(), |t| t.gaze_for_frame(k, fps));
                let map = build_qp_map(&cell, &geom, gaze)?;
                let (bits, stats) = encode_frame(frame, &map, codec)?;
                let decoded = decode_frame(&bits)?;
                let q = evaluate(frame, &decoded, gaze, resolved.w_px())?;
                Ok((stats.total_bits as f64, q.psnr_db, q.ewpsnr_db))
            })
            .collect::<Result<_, _>>()?;
        let bits: Vec<f64> = per_frame.iter().map(|r| r.0).collect();
        let n = per_frame.len() as f64;
        let (q1, q3) = (quantile(&bits, 0.25), quantile(&bits, 0.75));
        rows.push(SweepRow {
            qo_max: cell.qo_max,
            w: cell.w,
            w_px: resolved.w_px(),
            frames: per_frame.len(),
            mean_bits: bits.iter().sum::<f64>() / n,
            median_bits: quantile(&bits, 0.5),
            q1_bits: q1,
            q3_bits: q3,
            iqr_bits: q3 - q1,
            mean_psnr_db: per_frame.iter().map(|r| r.1).sum::<f64>() / n,
            mean_ewpsnr_db: per_frame.iter().map(|r| r.2).sum::<f64>() / n,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(
        out,
        "qo_max,w,w_px,frames,mean_bits,median_bits,q1_bits,q3_bits,iqr_bits,mean_psnr_db,mean_ewpsnr_db"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.3},{},{:.1},{:.1},{:.1},{:.1},{:.1},{:.4},{:.4}",
            r.qo_max,
            r.w,
            r.w_px,
            r.frames,
            r.mean_bits,
            r.median_bits,
            r.q1_bits,
            r.q3_bits,
            r.iqr_bits,
            r.mean_psnr_db,
            r.mean_ewpsnr_db
        )?;
    }
    Ok(())
}
