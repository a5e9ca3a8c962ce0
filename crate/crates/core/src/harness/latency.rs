//! Gaze-to-map latency statistics from a session's per-tick records.

use std::io::{self, Write};

use crate::analytics::empirical_cdf;

use super::{quantile, LatencyRecord, SessionError};

/// Fewer records than this give a meaningless p99.
pub const MIN_LATENCY_RECORDS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub records: usize,
    pub receive_to_map_p50_us: f64,
    pub receive_to_map_p99_us: f64,
    pub receive_to_map_max_us: f64,
    pub map_to_encode_p50_us: f64,
    pub map_to_encode_p99_us: f64,
    /// `(latency_us, fraction <= latency)` steps.
    pub receive_to_map_cdf: Vec<(f64, f64)>,
    pub map_to_encode_cdf: Vec<(f64, f64)>,
}

pub fn measure_latency(records: &[LatencyRecord]) -> Result<LatencyReport, SessionError> {
    if records.len() < MIN_LATENCY_RECORDS {
        return Err(SessionError::TooFewRecords {
            need: MIN_LATENCY_RECORDS,
            got: records.len(),
        });
    }
    let r2m: Vec<f64> = records.iter().map(|r| r.receive_to_map_us() as f64).collect();
    let m2e: Vec<f64> = records.iter().map(|r| r.map_to_encode_us() as f64).collect();
    Ok(LatencyReport {
        records: records.len(),
        receive_to_map_p50_us: quantile(&r2m, 0.5),
        receive_to_map_p99_us: quantile(&r2m, 0.99),
        receive_to_map_max_us: r2m.iter().copied().fold(0.0, f64::max),
        map_to_encode_p50_us: quantile(&m2e, 0.5),
        map_to_encode_p99_us: quantile(&m2e, 0.99),
        receive_to_map_cdf: empirical_cdf(&r2m)?,
        map_to_encode_cdf: empirical_cdf(&m2e)?,
    })
}

impl LatencyReport {
    /// Both CDFs in long form: `stage,latency_us,fraction`.
    pub fn write_cdf_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "stage,latency_us,fraction")?;
        for (stage, cdf) in [
            ("receive_to_map", &self.receive_to_map_cdf),
            ("map_to_encode", &self.map_to_encode_cdf),
        ] {
            for (v, f) in cdf {
                writeln!(out, "{stage},{v},{f:.6}")?;
            }
        }
        Ok(())
    }
}
