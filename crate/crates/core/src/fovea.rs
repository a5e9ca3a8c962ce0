//! Gaze-centred quantization offsets.
//!
//! A gaze point is translated into macroblock coordinates and every macroblock
//! receives an offset that grows with its distance from the gaze macroblock:
//!
//! ```text
//! QO(i, j) = QO_max * (1 - exp(-((i - x)^2 + (j - y)^2) / (2 W^2)))
//! ```
//!
//! where `(x, y)` is the gaze macroblock and `W` the foveal size in
//! macroblocks. At distance `W` the offset is `(1 - e^-1/2) ≈ 39.3%` of
//! `QO_max`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

/// Default macroblock edge length in pixels.
pub const DEFAULT_MB_SIZE: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FoveaError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid foveation configuration: {0}")]
    Config(String),
    #[error("gaze coordinate is not finite: ({0}, {1})")]
    NonFiniteGaze(f64, f64),
}

/// Frame dimensions together with their macroblock tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameGeometry {
    width_px: u32,
    height_px: u32,
    mb_size_px: u32,
}

impl FrameGeometry {
    pub fn new(width_px: u32, height_px: u32, mb_size_px: u32) -> Result<Self, FoveaError> {
        if mb_size_px == 0 {
            return Err(FoveaError::Geometry("macroblock size must be positive".into()));
        }
        if width_px < mb_size_px || height_px < mb_size_px {
            return Err(FoveaError::Geometry(format!(
                "{width_px}x{height_px} is smaller than one {mb_size_px}px macroblock"
            )));
        }
        Ok(Self {
            width_px,
            height_px,
            mb_size_px,
        })
    }

    /// Geometry with the default 16-pixel macroblocks.
    pub fn with_default_mb(width_px: u32, height_px: u32) -> Result<Self, FoveaError> {
        Self::new(width_px, height_px, DEFAULT_MB_SIZE)
    }

    pub fn width_px(&self) -> u32 {
        self.width_px
    }

    pub fn height_px(&self) -> u32 {
        self.height_px
    }

    pub fn mb_size_px(&self) -> u32 {
        self.mb_size_px
    }

    pub fn mb_cols(&self) -> u32 {
        self.width_px.div_ceil(self.mb_size_px)
    }

    pub fn mb_rows(&self) -> u32 {
        self.height_px.div_ceil(self.mb_size_px)
    }

    pub fn mb_count(&self) -> usize {
        self.mb_cols() as usize * self.mb_rows() as usize
    }

    pub fn pixel_count(&self) -> usize {
        self.width_px as usize * self.height_px as usize
    }

    /// Centre of the frame in pixels; the cold-start gaze position.
    pub fn center_px(&self) -> (f64, f64) {
        (self.width_px as f64 / 2.0, self.height_px as f64 / 2.0)
    }
}

impl fmt::Display for FrameGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} ({}x{} macroblocks of {}px)",
            self.width_px,
            self.height_px,
            self.mb_cols(),
            self.mb_rows(),
            self.mb_size_px
        )
    }
}

/// Column/row index of a macroblock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MbIndex {
    pub col: u32,
    pub row: u32,
}

impl MbIndex {
    pub fn new(col: u32, row: u32) -> Self {
        Self { col, row }
    }

    /// Squared Euclidean distance in macroblock units.
    pub fn dist_sq(self, other: MbIndex) -> f64 {
        let dc = self.col as f64 - other.col as f64;
        let dr = self.row as f64 - other.row as f64;
        dc * dc + dr * dr
    }
}

/// Size of the foveal region, either in pixels or relative to the frame width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FovealSize {
    AbsolutePx(f64),
    FwFraction(f64),
}

impl FovealSize {
    pub fn resolve_px(self, geom: &FrameGeometry) -> Result<f64, FoveaError> {
        let px = match self {
            FovealSize::AbsolutePx(px) => px,
            FovealSize::FwFraction(frac) => geom.width_px() as f64 * frac,
        };
        if !(px.is_finite() && px > 0.0) {
            return Err(FoveaError::Config(format!("foveal size {self} must be positive")));
        }
        Ok(px)
    }
}

impl fmt::Display for FovealSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FovealSize::AbsolutePx(px) => write!(f, "{px}px"),
            FovealSize::FwFraction(frac) => {
                let denom = 1.0 / frac;
                if (denom - denom.round()).abs() < 1e-9 {
                    write!(f, "fw/{}", denom.round())
                } else {
                    write!(f, "{frac}fw")
                }
            }
        }
    }
}

/// Parses `fw/8`, `0.125fw`, `170px` or a bare pixel count such as `170`.
impl FromStr for FovealSize {
    type Err = FoveaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || FoveaError::Config(format!("cannot parse foveal size {s:?}"));
        let parse_pos = |v: &str| -> Result<f64, FoveaError> {
            let x: f64 = v.trim().parse().map_err(|_| bad())?;
            if x.is_finite() && x > 0.0 {
                Ok(x)
            } else {
                Err(bad())
            }
        };
        if let Some(rest) = t.strip_prefix("fw/") {
            return Ok(FovealSize::FwFraction(1.0 / parse_pos(rest)?));
        }
        if let Some(rest) = t.strip_suffix("fw") {
            return Ok(FovealSize::FwFraction(parse_pos(rest)?));
        }
        let rest = t.strip_suffix("px").unwrap_or(&t);
        Ok(FovealSize::AbsolutePx(parse_pos(rest)?))
    }
}

/// Foveation parameters as configured, before binding to a frame geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoveationConfig {
    pub qo_max: f64,
    pub w: FovealSize,
}

impl FoveationConfig {
    pub fn new(qo_max: f64, w: FovealSize) -> Self {
        Self { qo_max, w }
    }

    /// Binds the configuration to a geometry, fixing `W` in pixels and
    /// macroblocks.
    pub fn resolve(&self, geom: &FrameGeometry) -> Result<ResolvedFoveation, FoveaError> {
        let w_px = self.w.resolve_px(geom)?;
        ResolvedFoveation::new(self.qo_max, w_px / geom.mb_size_px() as f64, w_px)
    }
}

impl Default for FoveationConfig {
    fn default() -> Self {
        Self {
            qo_max: 16.0,
            w: FovealSize::FwFraction(1.0 / 8.0),
        }
    }
}

/// Foveation parameters with `W` known in macroblock units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedFoveation {
    qo_max: f64,
    w_mb: f64,
    w_px: f64,
}

impl ResolvedFoveation {
    pub fn new(qo_max: f64, w_mb: f64, w_px: f64) -> Result<Self, FoveaError> {
        if !(qo_max.is_finite() && qo_max >= 0.0) {
            return Err(FoveaError::Config(format!("qo_max must be >= 0, got {qo_max}")));
        }
        if !(w_mb.is_finite() && w_mb > 0.0) {
            return Err(FoveaError::Config(format!("W must be > 0 macroblocks, got {w_mb}")));
        }
        Ok(Self { qo_max, w_mb, w_px })
    }

    pub fn qo_max(&self) -> f64 {
        self.qo_max
    }

    pub fn w_mb(&self) -> f64 {
        self.w_mb
    }

    pub fn w_px(&self) -> f64 {
        self.w_px
    }
}

/// Offset for macroblock `mb` when the gaze falls on `gaze_mb`.
pub fn qp_offset(cfg: &ResolvedFoveation, gaze_mb: MbIndex, mb: MbIndex) -> f64 {
    offset_at_dist_sq(cfg, gaze_mb.dist_sq(mb))
}

#[inline]
fn offset_at_dist_sq(cfg: &ResolvedFoveation, dist_sq: f64) -> f64 {
    let exponent = dist_sq / (2.0 * cfg.w_mb * cfg.w_mb);
    // 1 - e^-x without cancellation for small x
    cfg.qo_max * -(-exponent).exp_m1()
}

/// Macroblock containing a pixel position. Positions outside the frame clamp
/// to the nearest edge macroblock.
pub fn gaze_px_to_mb(geom: &FrameGeometry, gaze_px: (f64, f64)) -> Result<MbIndex, FoveaError> {
    let (x, y) = gaze_px;
    if !(x.is_finite() && y.is_finite()) {
        return Err(FoveaError::NonFiniteGaze(x, y));
    }
    let mb = geom.mb_size_px() as f64;
    let clamp = |v: f64, cells: u32| -> u32 {
        let idx = (v / mb).floor();
        idx.clamp(0.0, (cells - 1) as f64) as u32
    };
    Ok(MbIndex::new(clamp(x, geom.mb_cols()), clamp(y, geom.mb_rows())))
}

/// Per-macroblock offsets for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct QpOffsetMap {
    geometry: FrameGeometry,
    gaze_mb: MbIndex,
    qo_max: f64,
    offsets: Vec<f64>,
}

impl QpOffsetMap {
    /// Map with every offset zero (no foveation).
    pub fn flat(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            gaze_mb: MbIndex::default(),
            qo_max: 0.0,
            offsets: vec![0.0; geometry.mb_count()],
        }
    }

    /// Builds a map from raw offsets, e.g. when read back from a bitstream.
    pub fn from_offsets(
        geometry: FrameGeometry,
        gaze_mb: MbIndex,
        offsets: Vec<f64>,
    ) -> Result<Self, FoveaError> {
        if offsets.len() != geometry.mb_count() {
            return Err(FoveaError::Geometry(format!(
                "{} offsets for a {}-macroblock grid",
                offsets.len(),
                geometry.mb_count()
            )));
        }
        let qo_max = offsets.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            geometry,
            gaze_mb,
            qo_max,
            offsets,
        })
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    pub fn gaze_mb(&self) -> MbIndex {
        self.gaze_mb
    }

    pub fn qo_max(&self) -> f64 {
        self.qo_max
    }

    /// Row-major offsets, `mb_rows * mb_cols` entries.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn get(&self, mb: MbIndex) -> f64 {
        self.offsets[mb.row as usize * self.geometry.mb_cols() as usize + mb.col as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.offsets.chunks(self.geometry.mb_cols() as usize)
    }

    pub fn mean_offset(&self) -> f64 {
        self.offsets.iter().sum::<f64>() / self.offsets.len() as f64
    }

    /// One line per macroblock row, comma-separated offsets.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Binary PGM with one pixel per macroblock, offsets scaled so `qo_max`
    /// maps to 255.
    pub fn write_pgm<W: Write>(&self, out: W) -> io::Result<()> {
        let scale = if self.qo_max > 0.0 { 255.0 / self.qo_max } else { 0.0 };
        let pixels: Vec<u8> = self
            .offsets
            .iter()
            .map(|v| (v * scale).round().clamp(0.0, 255.0) as u8)
            .collect();
        crate::pgm::write_pgm(out, self.geometry.mb_cols(), self.geometry.mb_rows(), &pixels)
    }
}

/// Offsets for every macroblock given a gaze position in pixels.
pub fn build_qp_map(
    cfg: &FoveationConfig,
    geom: &FrameGeometry,
    gaze_px: (f64, f64),
) -> Result<QpOffsetMap, FoveaError> {
    let resolved = cfg.resolve(geom)?;
    let gaze_mb = gaze_px_to_mb(geom, gaze_px)?;
    Ok(build_qp_map_resolved(&resolved, geom, gaze_mb))
}

pub fn build_qp_map_resolved(
    cfg: &ResolvedFoveation,
    geom: &FrameGeometry,
    gaze_mb: MbIndex,
) -> QpOffsetMap {
    let mut offsets = Vec::with_capacity(geom.mb_count());
    for row in 0..geom.mb_rows() {
        for col in 0..geom.mb_cols() {
            offsets.push(qp_offset(cfg, gaze_mb, MbIndex::new(col, row)));
        }
    }
    QpOffsetMap {
        geometry: *geom,
        gaze_mb,
        qo_max: cfg.qo_max(),
        offsets,
    }
}

/// Per-pixel Gaussian acuity weights centred on the gaze point.
#[derive(Debug, Clone, PartialEq)]
pub struct AcuityWeightMap {
    geometry: FrameGeometry,
    gaze_px: (f64, f64),
    scale_px: f64,
    weights: Vec<f64>,
}

impl AcuityWeightMap {
    /// Weight 1 everywhere; reduces eye-weighted metrics to their plain form.
    pub fn uniform(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            gaze_px: geometry.center_px(),
            scale_px: f64::INFINITY,
            weights: vec![1.0; geometry.pixel_count()],
        }
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    pub fn gaze_px(&self) -> (f64, f64) {
        self.gaze_px
    }

    pub fn scale_px(&self) -> f64 {
        self.scale_px
    }

    /// Row-major weights, `height_px * width_px` entries.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.weights[y as usize * self.geometry.width_px() as usize + x as usize]
    }
}

pub fn acuity_weights(
    geom: &FrameGeometry,
    gaze_px: (f64, f64),
    scale_px: f64,
) -> Result<AcuityWeightMap, FoveaError> {
    if !(scale_px > 0.0) {
        return Err(FoveaError::Config(format!("acuity scale must be > 0, got {scale_px}")));
    }
    if !(gaze_px.0.is_finite() && gaze_px.1.is_finite()) {
        return Err(FoveaError::NonFiniteGaze(gaze_px.0, gaze_px.1));
    }
    let inv = 1.0 / (2.0 * scale_px * scale_px);
    // separable: exp(-(dx^2 + dy^2) k) = exp(-dx^2 k) * exp(-dy^2 k)
    let axis = |n: u32, c: f64| -> Vec<f64> {
        (0..n).map(|i| (-(i as f64 - c).powi(2) * inv).exp()).collect()
    };
    let wx = axis(geom.width_px(), gaze_px.0);
    let wy = axis(geom.height_px(), gaze_px.1);
    let mut weights = Vec::with_capacity(geom.pixel_count());
    for &ry in &wy {
        weights.extend(wx.iter().map(|&rx| rx * ry));
    }
    Ok(AcuityWeightMap {
        geometry: *geom,
        gaze_px,
        scale_px,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn resolved(qo_max: f64, w_mb: f64) -> ResolvedFoveation {
        ResolvedFoveation::new(qo_max, w_mb, w_mb * 16.0).unwrap()
    }

    #[test]
    fn offset_zero_at_gaze() {
        let cfg = resolved(16.0, 5.0);
        let g = MbIndex::new(40, 22);
        assert_eq!(qp_offset(&cfg, g, g), 0.0);
    }

    #[test]
    fn offset_at_distance_w() {
        let cfg = resolved(16.0, 5.0);
        let v = qp_offset(&cfg, MbIndex::new(40, 22), MbIndex::new(43, 26));
        // 16 * (1 - e^-0.5), evaluated to 20 digits
        let expected = 6.295_509_444_597_865;
        assert!((v - expected).abs() / expected < 1e-12, "{v}");
        // about 40% of the maximum
        assert!((v / 16.0 - 0.393_469_340_287_366_6).abs() < 1e-12);
    }

    #[test]
    fn offset_saturates_far_away() {
        let cfg = resolved(16.0, 5.0);
        let v = qp_offset(&cfg, MbIndex::new(40, 22), MbIndex::new(0, 0));
        assert!((v - 16.0).abs() < 1e-9);
    }

    #[test]
    fn gaze_to_mb_examples() {
        let g = FrameGeometry::with_default_mb(1366, 768).unwrap();
        assert_eq!(gaze_px_to_mb(&g, (0.0, 0.0)).unwrap(), MbIndex::new(0, 0));
        assert_eq!(gaze_px_to_mb(&g, (683.0, 384.0)).unwrap(), MbIndex::new(42, 24));
        assert_eq!(gaze_px_to_mb(&g, (2000.0, 900.0)).unwrap(), MbIndex::new(85, 47));
        assert_eq!(gaze_px_to_mb(&g, (-40.0, -1.0)).unwrap(), MbIndex::new(0, 0));
        assert!(matches!(
            gaze_px_to_mb(&g, (f64::NAN, 1.0)),
            Err(FoveaError::NonFiniteGaze(..))
        ));
        assert!(gaze_px_to_mb(&g, (1.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn geometry_tiling() {
        let g = FrameGeometry::with_default_mb(1366, 768).unwrap();
        assert_eq!((g.mb_cols(), g.mb_rows(), g.mb_count()), (86, 48, 4128));
        assert!(FrameGeometry::new(8, 64, 16).is_err());
        assert!(FrameGeometry::new(64, 64, 0).is_err());
        let exact = FrameGeometry::new(64, 48, 16).unwrap();
        assert_eq!((exact.mb_cols(), exact.mb_rows()), (4, 3));
    }

    #[test]
    fn foveal_size_parsing() {
        assert_eq!("fw/8".parse::<FovealSize>().unwrap(), FovealSize::FwFraction(0.125));
        assert_eq!("FW/4".parse::<FovealSize>().unwrap(), FovealSize::FwFraction(0.25));
        assert_eq!("0.5fw".parse::<FovealSize>().unwrap(), FovealSize::FwFraction(0.5));
        assert_eq!("170px".parse::<FovealSize>().unwrap(), FovealSize::AbsolutePx(170.0));
        assert_eq!("170".parse::<FovealSize>().unwrap(), FovealSize::AbsolutePx(170.0));
        assert!("fw/0".parse::<FovealSize>().is_err());
        assert!("-3".parse::<FovealSize>().is_err());
        assert!("wide".parse::<FovealSize>().is_err());
        assert_eq!(FovealSize::FwFraction(0.125).to_string(), "fw/8");
    }

    #[test]
    fn resolve_uses_width_only() {
        let g = FrameGeometry::with_default_mb(1366, 768).unwrap();
        let r = FoveationConfig::new(16.0, FovealSize::FwFraction(0.125)).resolve(&g).unwrap();
        assert_eq!(r.w_px(), 170.75);
        assert_eq!(r.w_mb(), 10.671875);
        assert!(FoveationConfig::new(-1.0, FovealSize::AbsolutePx(10.0)).resolve(&g).is_err());
        assert!(FoveationConfig::new(1.0, FovealSize::AbsolutePx(0.0)).resolve(&g).is_err());
    }

    #[test]
    fn map_has_one_cell_per_macroblock() {
        let g = FrameGeometry::with_default_mb(1366, 768).unwrap();
        let map = build_qp_map(&FoveationConfig::default(), &g, g.center_px()).unwrap();
        assert_eq!(map.offsets().len(), 4128);
        assert_eq!(map.rows().count(), 48);
        assert_eq!(map.get(map.gaze_mb()), 0.0);
        assert_eq!(map.gaze_mb(), MbIndex::new(42, 24));
    }

    #[test]
    fn cells_within_forty_percent_at_fw8() {
        // Brute-force count of cells whose offset is at most 40% of qo_max,
        // using the closed-form radius d^2 <= -2 W^2 ln(0.6) rather than the
        // offset formula itself.
        let g = FrameGeometry::with_default_mb(1366, 768).unwrap();
        let w_mb = 1366.0 / 8.0 / 16.0;
        let limit = -2.0 * w_mb * w_mb * (0.6f64).ln();
        let (gc, gr) = (42i64, 24i64);
        let mut oracle = 0;
        for r in 0..48i64 {
            for c in 0..86i64 {
                if ((c - gc).pow(2) + (r - gr).pow(2)) as f64 <= limit {
                    oracle += 1;
                }
            }
        }
        assert_eq!(oracle, 365);
        let map = build_qp_map(&FoveationConfig::default(), &g, g.center_px()).unwrap();
        let counted = map.offsets().iter().filter(|&&v| v <= 0.4 * 16.0).count();
        assert_eq!(counted, oracle);
    }

    #[test]
    fn csv_and_pgm_export() {
        let g = FrameGeometry::new(48, 32, 16).unwrap();
        let map = build_qp_map(
            &FoveationConfig::new(8.0, FovealSize::AbsolutePx(16.0)),
            &g,
            (0.0, 0.0),
        )
        .unwrap();
        let mut csv = Vec::new();
        map.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 3);
        assert!(lines[0].starts_with("0.000000,"));

        let mut pgm = Vec::new();
        map.write_pgm(&mut pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        let px = &pgm[pgm.len() - 6..];
        assert_eq!(px[0], 0);
        // (1 - e^-1/2) * 255 = 100.33
        assert_eq!(px[1], 100);
        assert!(px[5] > px[1]);
    }

    #[test]
    fn acuity_weight_examples() {
        let g = FrameGeometry::new(256, 256, 16).unwrap();
        let w = acuity_weights(&g, (10.0, 10.0), 100.0).unwrap();
        assert_eq!(w.get(10, 10), 1.0);
        assert!((w.get(110, 10) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((w.get(10, 110) - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(w.get(13, 14), w.get(14, 13));
        assert_eq!(w.get(7, 10), w.get(13, 10));
        assert!(acuity_weights(&g, (1.0, 1.0), 0.0).is_err());
        assert!(acuity_weights(&g, (1.0, 1.0), -5.0).is_err());
    }

    proptest! {
        #[test]
        fn map_invariants(
            width in 16u32..400,
            height in 16u32..300,
            qo_max in 0.0f64..51.0,
            w_px in 1.0f64..600.0,
            gx in -50.0f64..450.0,
            gy in -50.0f64..350.0,
        ) {
            let g = FrameGeometry::with_default_mb(width, height).unwrap();
            let cfg = FoveationConfig::new(qo_max, FovealSize::AbsolutePx(w_px));
            let map = build_qp_map(&cfg, &g, (gx, gy)).unwrap();
            let resolved = cfg.resolve(&g).unwrap();
            let gaze = map.gaze_mb();
            prop_assert_eq!(map.get(gaze), 0.0);
            let mut cells: Vec<(f64, f64)> = Vec::new();
            for row in 0..g.mb_rows() {
                for col in 0..g.mb_cols() {
                    let mb = MbIndex::new(col, row);
                    let v = map.get(mb);
                    prop_assert!(v >= 0.0 && v <= qo_max);
                    // cell-wise equivalence with the scalar formula
                    prop_assert_eq!(v, qp_offset(&resolved, gaze, mb));
                    cells.push((gaze.dist_sq(mb), v));
                }
            }
            cells.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in cells.windows(2) {
                prop_assert!(pair[1].1 >= pair[0].1);
                // strict growth while the exponential has not saturated
                let x = pair[1].0 / (2.0 * resolved.w_mb().powi(2));
                if qo_max > 0.0 && pair[1].0 > pair[0].0 && x < 20.0 {
                    prop_assert!(pair[1].1 > pair[0].1);
                }
            }
        }

        #[test]
        fn offset_scale_invariance(
            qo_max in 0.1f64..51.0,
            w in 0.5f64..40.0,
            dc in 0u32..60,
            dr in 0u32..60,
            k in 2u32..5,
        ) {
            let a = resolved(qo_max, w);
            let b = resolved(qo_max, w * k as f64);
            let g = MbIndex::new(0, 0);
            let va = qp_offset(&a, g, MbIndex::new(dc, dr));
            let vb = qp_offset(&b, g, MbIndex::new(dc * k, dr * k));
            prop_assert!((va - vb).abs() <= 1e-12 * qo_max);
        }

        #[test]
        fn gaze_mapping_round_trips_through_cell_centre(
            width in 16u32..2000,
            height in 16u32..2000,
            fx in 0.0f64..1.0,
            fy in 0.0f64..1.0,
        ) {
            let g = FrameGeometry::with_default_mb(width, height).unwrap();
            let p = (fx * (width as f64 - 1e-6), fy * (height as f64 - 1e-6));
            let mb = gaze_px_to_mb(&g, p).unwrap();
            let center = (
                mb.col as f64 * 16.0 + 8.0,
                mb.row as f64 * 16.0 + 8.0,
            );
            prop_assert_eq!(gaze_px_to_mb(&g, center).unwrap(), mb);
        }
    }
}
