//! Deterministic intra-only reference codec driven by a per-macroblock
//! quantization offset map.
//!
//! Each 16x16 macroblock is coded as four 8x8 luma blocks (plus one 8x8 block
//! per chroma plane for 4:2:0 input). Blocks go through an orthonormal DCT,
//! a mid-tread uniform quantizer whose step is `base_q * 2^(offset / 6)`, and
//! a zig-zag run/level Exp-Golomb entropy coder.
//!
//! # `.fvb` layout (little-endian)
//!
//! | bytes            | field                                        |
//! |------------------|----------------------------------------------|
//! | 0..4             | magic `FVB1`                                 |
//! | 4..8             | width, `u32`                                 |
//! | 8..12            | height, `u32`                                |
//! | 12..16           | base quantizer step, `f32`                   |
//! | 16..16+4·mbs     | offset map, `f32`, row-major                 |
//! | next byte        | plane layout: 0 = luma only, 1 = 4:2:0       |
//! | rest             | entropy-coded blocks, MSB-first, zero padded |
//!
//! Per block: `se(dc - previous dc of the same plane)`, `ue(nonzero ac count)`
//! and for each nonzero AC coefficient in zig-zag order `ue(zero run)` and
//! `ue(2 (|level| - 1) + sign)`.

mod bits;
mod dct;
pub mod y4m;

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::fovea::{FrameGeometry, MbIndex, QpOffsetMap};
use bits::{BitError, BitReader, BitWriter};
use dct::{Block, ZIGZAG};

pub use y4m::{read_y4m, write_y4m, Y4mColor, Y4mHeader, Y4mVideo};

pub const FVB_MAGIC: [u8; 4] = *b"FVB1";
pub const HEADER_LEN: usize = 16;
/// Macroblock size fixed by the container.
pub const CODEC_MB_SIZE: u32 = 16;

const MAX_DIM: u32 = 16384;
const MAX_OFFSET: f32 = 1024.0;
const MAX_LEVEL: i64 = 1 << 24;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("input error: {0}")]
    Input(String),
    #[error("invalid codec configuration: {0}")]
    Config(String),
    #[error("truncated stream at byte {offset}")]
    Truncated { offset: usize },
    #[error("corrupt stream at byte {offset}: {reason}")]
    Corrupt { offset: usize, reason: String },
    #[error("y4m format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Raw 8-bit frame: a luma plane and optional 4:2:0 chroma planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    geometry: FrameGeometry,
    luma: Vec<u8>,
    chroma: Option<(Vec<u8>, Vec<u8>)>,
}

/// Dimensions of each 4:2:0 chroma plane.
pub fn chroma_size(geom: &FrameGeometry) -> (u32, u32) {
    (geom.width_px().div_ceil(2), geom.height_px().div_ceil(2))
}

impl Frame {
    pub fn mono(geometry: FrameGeometry, luma: Vec<u8>) -> Result<Self, CodecError> {
        if luma.len() != geometry.pixel_count() {
            return Err(CodecError::Input(format!(
                "luma plane has {} samples, geometry {} needs {}",
                luma.len(),
                geometry,
                geometry.pixel_count()
            )));
        }
        Ok(Self {
            geometry,
            luma,
            chroma: None,
        })
    }

    pub fn yuv420(
        geometry: FrameGeometry,
        luma: Vec<u8>,
        cb: Vec<u8>,
        cr: Vec<u8>,
    ) -> Result<Self, CodecError> {
        let mut f = Self::mono(geometry, luma)?;
        let (cw, ch) = chroma_size(&geometry);
        let need = cw as usize * ch as usize;
        if cb.len() != need || cr.len() != need {
            return Err(CodecError::Input(format!(
                "chroma planes have {}/{} samples, {cw}x{ch} needed",
                cb.len(),
                cr.len()
            )));
        }
        f.chroma = Some((cb, cr));
        Ok(f)
    }

    /// Uniform frame; chroma planes (if requested) are neutral grey.
    pub fn filled(geometry: FrameGeometry, value: u8, with_chroma: bool) -> Self {
        let (cw, ch) = chroma_size(&geometry);
        let n = cw as usize * ch as usize;
        Self {
            geometry,
            luma: vec![value; geometry.pixel_count()],
            chroma: with_chroma.then(|| (vec![128; n], vec![128; n])),
        }
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    pub fn luma(&self) -> &[u8] {
        &self.luma
    }

    pub fn luma_mut(&mut self) -> &mut [u8] {
        &mut self.luma
    }

    pub fn chroma(&self) -> Option<(&[u8], &[u8])> {
        self.chroma.as_ref().map(|(b, r)| (b.as_slice(), r.as_slice()))
    }

    pub fn has_chroma(&self) -> bool {
        self.chroma.is_some()
    }

    pub fn luma_at(&self, x: u32, y: u32) -> u8 {
        self.luma[y as usize * self.geometry.width_px() as usize + x as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecConfig {
    /// Quantizer step at offset zero.
    pub base_q: f64,
    pub mb_size_px: u32,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            base_q: 4.0,
            mb_size_px: CODEC_MB_SIZE,
        }
    }
}

impl CodecConfig {
    pub fn new(base_q: f64) -> Self {
        Self {
            base_q,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if !(self.base_q.is_finite() && self.base_q >= 0.5) {
            return Err(CodecError::Config(format!("base_q must be >= 0.5, got {}", self.base_q)));
        }
        if self.mb_size_px != CODEC_MB_SIZE {
            return Err(CodecError::Config(format!(
                "macroblock size must be {CODEC_MB_SIZE}, got {}",
                self.mb_size_px
            )));
        }
        Ok(())
    }
}

/// Step size for a macroblock with the given offset; doubles every 6 units.
pub fn quantizer_step(base_q: f64, offset: f64) -> f64 {
    base_q * (offset / 6.0).exp2()
}

/// Mid-tread uniform quantizer.
pub fn quantize(coeff: f64, step: f64) -> i32 {
    (coeff / step).round() as i32
}

pub fn dequantize(level: i32, step: f64) -> f64 {
    level as f64 * step
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeStats {
    /// Entropy-coded macroblock bits; equals the sum of `bits_per_mb`.
    pub total_bits: u64,
    /// Row-major, one entry per macroblock.
    pub bits_per_mb: Vec<u64>,
    pub mean_offset: f64,
    pub encode_time_us: u64,
    /// Container header plus offset map, in bytes.
    pub header_bytes: usize,
    /// Size of the whole bitstream in bytes.
    pub stream_bytes: usize,
}

impl EncodeStats {
    /// Mean bits per macroblock inside and outside `radius_mb` of `center`.
    pub fn bit_density_split(
        &self,
        geom: &FrameGeometry,
        center: MbIndex,
        radius_mb: f64,
    ) -> (f64, f64) {
        let (mut inside, mut n_in, mut outside, mut n_out) = (0u64, 0u64, 0u64, 0u64);
        let r2 = radius_mb * radius_mb;
        for row in 0..geom.mb_rows() {
            for col in 0..geom.mb_cols() {
                let bits = self.bits_per_mb[(row * geom.mb_cols() + col) as usize];
                if center.dist_sq(MbIndex::new(col, row)) <= r2 {
                    inside += bits;
                    n_in += 1;
                } else {
                    outside += bits;
                    n_out += 1;
                }
            }
        }
        let mean = |s: u64, n: u64| if n == 0 { 0.0 } else { s as f64 / n as f64 };
        (mean(inside, n_in), mean(outside, n_out))
    }
}

struct Plane<'a> {
    data: &'a [u8],
    w: usize,
    h: usize,
}

impl Plane<'_> {
    /// 8x8 block at `(x0, y0)`, centred on zero, edges replicated.
    fn block(&self, x0: usize, y0: usize) -> Block {
        let mut b = [0.0; 64];
        for y in 0..8 {
            let sy = (y0 + y).min(self.h - 1);
            let row = &self.data[sy * self.w..(sy + 1) * self.w];
            for x in 0..8 {
                b[y * 8 + x] = row[(x0 + x).min(self.w - 1)] as f64 - 128.0;
            }
        }
        b
    }
}

fn blocks_per_mb(chroma: bool) -> usize {
    if chroma {
        6
    } else {
        4
    }
}

/// Block origins of macroblock `(col, row)`: (plane, x, y).
fn block_origins(col: usize, row: usize, chroma: bool) -> impl Iterator<Item = (usize, usize, usize)> {
    let (lx, ly) = (col * 16, row * 16);
    let luma = [(0, lx, ly), (0, lx + 8, ly), (0, lx, ly + 8), (0, lx + 8, ly + 8)];
    let chroma_blocks = [(1, col * 8, row * 8), (2, col * 8, row * 8)];
    luma.into_iter()
        .chain(chroma_blocks.into_iter().take(if chroma { 2 } else { 0 }))
}

fn check_offsets(offsets: &[f32]) -> Result<(), String> {
    match offsets
        .iter()
        .position(|o| !(o.is_finite() && *o >= 0.0 && *o <= MAX_OFFSET))
    {
        Some(i) => Err(format!("offset {} at macroblock {i} out of range", offsets[i])),
        None => Ok(()),
    }
}

fn code_block(bw: &mut BitWriter, q: &[i32; 64], dc_pred: &mut i64) {
    let dc = q[0] as i64;
    bw.put_se(dc - *dc_pred);
    *dc_pred = dc;
    let nonzero = ZIGZAG[1..].iter().filter(|&&i| q[i] != 0).count();
    bw.put_ue(nonzero as u64);
    let mut run = 0u64;
    for &i in &ZIGZAG[1..] {
        let v = q[i];
        if v == 0 {
            run += 1;
            continue;
        }
        bw.put_ue(run);
        run = 0;
        bw.put_ue(2 * (v.unsigned_abs() as u64 - 1) + (v < 0) as u64);
    }
}

pub fn encode_frame(
    f: &Frame,
    map: &QpOffsetMap,
    cfg: &CodecConfig,
) -> Result<(Vec<u8>, EncodeStats), CodecError> {
    let started = Instant::now();
    cfg.validate()?;
    let geom = *f.geometry();
    if geom != *map.geometry() {
        return Err(CodecError::Input(format!(
            "frame geometry {geom} does not match offset map geometry {}",
            map.geometry()
        )));
    }
    if geom.mb_size_px() != CODEC_MB_SIZE {
        return Err(CodecError::Input(format!(
            "geometry uses {}px macroblocks, codec needs {CODEC_MB_SIZE}",
            geom.mb_size_px()
        )));
    }
    if geom.width_px() > MAX_DIM || geom.height_px() > MAX_DIM {
        return Err(CodecError::Input(format!("{geom} exceeds {MAX_DIM}px")));
    }
    // the decoder only sees the binary32 values, so quantize with those
    let base_q = cfg.base_q as f32;
    let offsets: Vec<f32> = map.offsets().iter().map(|&o| o as f32).collect();
    check_offsets(&offsets).map_err(CodecError::Input)?;

    let mut out = Vec::with_capacity(HEADER_LEN + 4 * offsets.len() + geom.pixel_count() / 2);
    out.extend_from_slice(&FVB_MAGIC);
    out.extend_from_slice(&geom.width_px().to_le_bytes());
    out.extend_from_slice(&geom.height_px().to_le_bytes());
    out.extend_from_slice(&base_q.to_le_bytes());
    for o in &offsets {
        out.extend_from_slice(&o.to_le_bytes());
    }
    let header_bytes = out.len();

    let chroma = f.has_chroma();
    let (cw, ch) = chroma_size(&geom);
    let luma = Plane {
        data: f.luma(),
        w: geom.width_px() as usize,
        h: geom.height_px() as usize,
    };
    let (cb, cr) = f.chroma().unwrap_or((&[], &[]));
    let planes = [
        luma,
        Plane { data: cb, w: cw as usize, h: ch as usize },
        Plane { data: cr, w: cw as usize, h: ch as usize },
    ];
    let cols = geom.mb_cols() as usize;
    let bpm = blocks_per_mb(chroma);

    // transform + quantization is independent per macroblock
    let quantized: Vec<[i32; 64]> = (0..geom.mb_rows() as usize)
        .into_par_iter()
        .flat_map_iter(|row| {
            let planes = &planes;
            let offsets = &offsets;
            (0..cols).flat_map(move |col| {
                let step = quantizer_step(base_q as f64, offsets[row * cols + col] as f64);
                block_origins(col, row, chroma).map(move |(p, x, y)| {
                    let coeffs = dct::forward(&planes[p].block(x, y));
                    std::array::from_fn(|i| quantize(coeffs[i], step))
                })
            })
        })
        .collect();

    let mut bw = BitWriter::new();
    let mut dc_pred = [0i64; 3];
    let mut bits_per_mb = Vec::with_capacity(geom.mb_count());
    for mb_blocks in quantized.chunks(bpm) {
        let before = bw.position();
        for (b, q) in mb_blocks.iter().enumerate() {
            let plane = if b < 4 { 0 } else { b - 3 };
            code_block(&mut bw, q, &mut dc_pred[plane]);
        }
        bits_per_mb.push(bw.position() - before);
    }
    let total_bits = bw.position();
    out.push(chroma as u8);
    out.extend_from_slice(&bw.finish());

    let stats = EncodeStats {
        total_bits,
        bits_per_mb,
        mean_offset: map.mean_offset(),
        encode_time_us: started.elapsed().as_micros() as u64,
        header_bytes,
        stream_bytes: out.len(),
    };
    Ok((out, stats))
}

/// Parsed `.fvb` header and offset map.
#[derive(Debug, Clone, PartialEq)]
pub struct FvbHeader {
    pub geometry: FrameGeometry,
    pub base_q: f32,
    pub offsets: Vec<f32>,
}

impl FvbHeader {
    pub fn byte_len(&self) -> usize {
        HEADER_LEN + 4 * self.offsets.len()
    }
}

pub fn read_header(data: &[u8]) -> Result<FvbHeader, CodecError> {
    if data.len() < HEADER_LEN {
        return Err(CodecError::Truncated { offset: data.len() });
    }
    let corrupt = |offset: usize, reason: String| CodecError::Corrupt { offset, reason };
    if data[0..4] != FVB_MAGIC {
        return Err(corrupt(0, format!("bad magic {:02x?}", &data[0..4])));
    }
    let le4 = |at: usize| [data[at], data[at + 1], data[at + 2], data[at + 3]];
    let width = u32::from_le_bytes(le4(4));
    let height = u32::from_le_bytes(le4(8));
    if width > MAX_DIM || height > MAX_DIM {
        return Err(corrupt(4, format!("{width}x{height} exceeds {MAX_DIM}px")));
    }
    let geometry = FrameGeometry::new(width, height, CODEC_MB_SIZE)
        .map_err(|e| corrupt(4, e.to_string()))?;
    let base_q = f32::from_le_bytes(le4(12));
    if !(base_q.is_finite() && base_q >= 0.5) {
        return Err(corrupt(12, format!("base_q {base_q} out of range")));
    }
    let need = HEADER_LEN + 4 * geometry.mb_count();
    if data.len() < need {
        return Err(CodecError::Truncated { offset: data.len() });
    }
    let offsets: Vec<f32> = (0..geometry.mb_count())
        .map(|i| f32::from_le_bytes(le4(HEADER_LEN + 4 * i)))
        .collect();
    if let Err(reason) = check_offsets(&offsets) {
        let i = offsets
            .iter()
            .position(|o| !(o.is_finite() && *o >= 0.0 && *o <= MAX_OFFSET))
            .unwrap_or(0);
        return Err(corrupt(HEADER_LEN + 4 * i, reason));
    }
    Ok(FvbHeader {
        geometry,
        base_q,
        offsets,
    })
}

pub fn decode_frame(data: &[u8]) -> Result<Frame, CodecError> {
    let header = read_header(data)?;
    let geom = header.geometry;
    let mut at = header.byte_len();
    let layout = *data.get(at).ok_or(CodecError::Truncated { offset: at })?;
    let chroma = match layout {
        0 => false,
        1 => true,
        other => {
            return Err(CodecError::Corrupt {
                offset: at,
                reason: format!("unknown plane layout {other}"),
            })
        }
    };
    at += 1;
    let payload = &data[at..];
    let bpm = blocks_per_mb(chroma);
    let n_blocks = geom.mb_count() * bpm;
    // every block needs at least two bits
    if (payload.len() as u64) * 8 < 2 * n_blocks as u64 {
        return Err(CodecError::Truncated { offset: data.len() });
    }

    let bit_err = |e: BitError| {
        let offset = at + (e.bit_pos() / 8) as usize;
        match e {
            BitError::Eof(_) => CodecError::Truncated { offset },
            BitError::Prefix(_) => CodecError::Corrupt {
                offset,
                reason: "oversized Exp-Golomb code".into(),
            },
        }
    };
    let mut br = BitReader::new(payload);
    let mut dc_pred = [0i64; 3];
    let mut levels: Vec<[i32; 64]> = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let plane = match b % bpm {
            0..=3 => 0,
            p => p - 3,
        };
        let corrupt = |br: &BitReader, reason: &str| CodecError::Corrupt {
            offset: at + (br.position() / 8) as usize,
            reason: reason.to_string(),
        };
        let mut q = [0i32; 64];
        let dc = dc_pred[plane]
            .checked_add(br.get_se().map_err(bit_err)?)
            .filter(|v| v.abs() <= MAX_LEVEL)
            .ok_or_else(|| corrupt(&br, "dc level out of range"))?;
        dc_pred[plane] = dc;
        q[0] = dc as i32;
        let nonzero = br.get_ue().map_err(bit_err)?;
        if nonzero > 63 {
            return Err(corrupt(&br, "too many coefficients"));
        }
        let mut pos = 1u64;
        for _ in 0..nonzero {
            pos += br.get_ue().map_err(bit_err)?;
            if pos > 63 {
                return Err(corrupt(&br, "run past end of block"));
            }
            let m = br.get_ue().map_err(bit_err)?;
            let mag = (m / 2 + 1) as i64;
            if mag > MAX_LEVEL {
                return Err(corrupt(&br, "ac level out of range"));
            }
            q[ZIGZAG[pos as usize]] = if m % 2 == 1 { -mag } else { mag } as i32;
            pos += 1;
        }
        levels.push(q);
    }
    if !br.at_padded_end() {
        return Err(CodecError::Corrupt {
            offset: at + (br.position() / 8) as usize,
            reason: "trailing data after last macroblock".into(),
        });
    }

    let w = geom.width_px() as usize;
    let h = geom.height_px() as usize;
    let (cw, ch) = chroma_size(&geom);
    let (cw, ch) = (cw as usize, ch as usize);
    let cols = geom.mb_cols() as usize;
    let base_q = header.base_q as f64;
    let offsets = &header.offsets;
    let levels = &levels;

    // reconstruct one macroblock row at a time: (luma rows, cb rows, cr rows)
    let rows: Vec<[Vec<u8>; 3]> = (0..geom.mb_rows() as usize)
        .into_par_iter()
        .map(|row| {
            let luma_rows = (h - row * 16).min(16);
            let chroma_rows = if chroma { ch.saturating_sub(row * 8).min(8) } else { 0 };
            let mut bufs = [
                vec![0u8; luma_rows * w],
                vec![0u8; chroma_rows * cw],
                vec![0u8; chroma_rows * cw],
            ];
            for col in 0..cols {
                let mb = row * cols + col;
                let step = quantizer_step(base_q, offsets[mb] as f64);
                for (k, (p, x0, y0)) in block_origins(col, row, chroma).enumerate() {
                    let q = &levels[mb * bpm + k];
                    let coeffs: Block = std::array::from_fn(|i| dequantize(q[i], step));
                    let pixels = dct::inverse(&coeffs);
                    let (pw, prow0, nrows) = if p == 0 {
                        (w, row * 16, luma_rows)
                    } else {
                        (cw, row * 8, chroma_rows)
                    };
                    for y in 0..8 {
                        let ry = y0 + y - prow0;
                        if ry >= nrows {
                            break;
                        }
                        for x in 0..8 {
                            if x0 + x >= pw {
                                break;
                            }
                            let v = (pixels[y * 8 + x] + 128.0).round().clamp(0.0, 255.0);
                            bufs[p][ry * pw + x0 + x] = v as u8;
                        }
                    }
                }
            }
            bufs
        })
        .collect();

    let mut luma = Vec::with_capacity(w * h);
    let mut cb = Vec::new();
    let mut cr = Vec::new();
    for [l, b, r] in rows {
        luma.extend_from_slice(&l);
        cb.extend_from_slice(&b);
        cr.extend_from_slice(&r);
    }
    if chroma {
        Frame::yuv420(geom, luma, cb, cr)
    } else {
        Frame::mono(geom, luma)
    }
}
