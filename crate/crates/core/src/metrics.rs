//! PSNR and eye-weighted PSNR over the luma plane.
//!
//! The eye-weighted variant replaces the mean squared error with a weighted
//! mean, weights taken from a gaze-centred acuity map:
//! `EWMSE = Σ w·e² / Σ w`, `EWPSNR = 10·log10(255² / EWMSE)`.
//! Both are capped at [`PSNR_CAP_DB`] so identical frames stay plottable.

use thiserror::Error;

use crate::codec::Frame;
use crate::fovea::{acuity_weights, AcuityWeightMap, FoveaError};

pub const PSNR_CAP_DB: f64 = 100.0;
const PEAK_SQ: f64 = 255.0 * 255.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error("weights sum to zero")]
    ZeroWeights,
    #[error(transparent)]
    Fovea(#[from] FoveaError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ewpsnr_db: f64,
    pub gaze_px: (f64, f64),
    pub weight_scale_px: f64,
}

fn mse_to_db(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (PEAK_SQ / mse).log10()).min(PSNR_CAP_DB)
    }
}

fn check_pair(reference: &Frame, test: &Frame) -> Result<(), MetricsError> {
    if reference.geometry() != test.geometry() {
        return Err(MetricsError::Geometry(format!(
            "{} vs {}",
            reference.geometry(),
            test.geometry()
        )));
    }
    Ok(())
}

pub fn mse(reference: &Frame, test: &Frame) -> Result<f64, MetricsError> {
    check_pair(reference, test)?;
    let sum: u64 = reference
        .luma()
        .iter()
        .zip(test.luma())
        .map(|(&a, &b)| {
            let d = a.abs_diff(b) as u64;
            d * d
        })
        .sum();
    Ok(sum as f64 / reference.luma().len() as f64)
}

pub fn psnr(reference: &Frame, test: &Frame) -> Result<f64, MetricsError> {
    Ok(mse_to_db(mse(reference, test)?))
}

pub fn ewpsnr(reference: &Frame, test: &Frame, w: &AcuityWeightMap) -> Result<f64, MetricsError> {
    check_pair(reference, test)?;
    if w.geometry() != reference.geometry() {
        return Err(MetricsError::Geometry(format!(
            "weights for {}, frames are {}",
            w.geometry(),
            reference.geometry()
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((&a, &b), &wt) in reference.luma().iter().zip(test.luma()).zip(w.weights()) {
        let d = a as f64 - b as f64;
        num += wt * d * d;
        den += wt;
    }
    if !(den > 0.0) {
        return Err(MetricsError::ZeroWeights);
    }
    Ok(mse_to_db(num / den))
}

/// Both metrics for one frame pair with Gaussian weights of `scale_px`
/// around `gaze_px`.
pub fn evaluate(
    reference: &Frame,
    test: &Frame,
    gaze_px: (f64, f64),
    scale_px: f64,
) -> Result<QualityReport, MetricsError> {
    let weights = acuity_weights(reference.geometry(), gaze_px, scale_px)?;
    Ok(QualityReport {
        psnr_db: psnr(reference, test)?,
        ewpsnr_db: ewpsnr(reference, test, &weights)?,
        gaze_px,
        weight_scale_px: scale_px,
    })
}
