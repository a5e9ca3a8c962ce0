//! Gaze stream framing.
//!
//! A stream starts with the 4-byte magic `FVG1` followed by back-to-back
//! 20-byte little-endian records:
//!
//! | bytes  | field                              |
//! |--------|------------------------------------|
//! | 0..8   | timestamp, microseconds, `u64`     |
//! | 8..12  | x, pixels, IEEE-754 `f32`          |
//! | 12..16 | y, pixels, IEEE-754 `f32`          |
//! | 16..20 | flags, `u32`; bit 0 = valid        |

use std::io::{self, Write};

use super::{GazeError, GazeSample};

pub const STREAM_MAGIC: [u8; 4] = *b"FVG1";
pub const RECORD_LEN: usize = 20;

const FLAG_VALID: u32 = 1;

pub fn encode_sample(s: &GazeSample) -> Result<[u8; RECORD_LEN], GazeError> {
    if !s.is_finite() {
        return Err(GazeError::NonFinite(s.x_px, s.y_px));
    }
    let mut out = [0u8; RECORD_LEN];
    out[0..8].copy_from_slice(&s.timestamp_us.to_le_bytes());
    out[8..12].copy_from_slice(&s.x_px.to_le_bytes());
    out[12..16].copy_from_slice(&s.y_px.to_le_bytes());
    let flags = if s.valid { FLAG_VALID } else { 0 };
    out[16..20].copy_from_slice(&flags.to_le_bytes());
    Ok(out)
}

pub fn decode_sample(bytes: &[u8]) -> Result<GazeSample, GazeError> {
    if bytes.len() != RECORD_LEN {
        return Err(GazeError::Framing {
            expected: RECORD_LEN,
            got: bytes.len(),
        });
    }
    let le4 = |at: usize| [bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]];
    let mut ts = [0u8; 8];
    ts.copy_from_slice(&bytes[0..8]);
    let flags = u32::from_le_bytes(le4(16));
    if flags & !FLAG_VALID != 0 {
        return Err(GazeError::Protocol(format!("reserved flag bits set: {flags:#x}")));
    }
    let s = GazeSample {
        timestamp_us: u64::from_le_bytes(ts),
        x_px: f32::from_le_bytes(le4(8)),
        y_px: f32::from_le_bytes(le4(12)),
        valid: flags & FLAG_VALID != 0,
    };
    if !s.is_finite() {
        return Err(GazeError::Protocol(format!(
            "non-finite coordinates ({}, {})",
            s.x_px, s.y_px
        )));
    }
    Ok(s)
}

/// Incremental decoder for a gaze byte stream split at arbitrary boundaries.
#[derive(Debug, Default)]
pub struct StreamDecoder {
    magic_seen: bool,
    buf: Vec<u8>,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Consumes `bytes`, appending every completed record to `out`. Returns
    /// the number of samples decoded by this call.
    pub fn feed(&mut self, bytes: &[u8], out: &mut Vec<GazeSample>) -> Result<usize, GazeError> {
        self.buf.extend_from_slice(bytes);
        let mut pos = 0;
        if !self.magic_seen {
            let have = self.buf.len().min(STREAM_MAGIC.len());
            if self.buf[..have] != STREAM_MAGIC[..have] {
                return Err(GazeError::BadMagic(self.buf[..have].to_vec()));
            }
            if have < STREAM_MAGIC.len() {
                return Ok(0);
            }
            self.magic_seen = true;
            pos = STREAM_MAGIC.len();
        }
        let before = out.len();
        while self.buf.len() - pos >= RECORD_LEN {
            out.push(decode_sample(&self.buf[pos..pos + RECORD_LEN])?);
            pos += RECORD_LEN;
        }
        self.buf.drain(..pos);
        Ok(out.len() - before)
    }

    /// Bytes of an incomplete record (or magic) waiting for more input.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}

/// Writes the stream magic once, then one record per `send`.
pub struct GazeWriter<W: Write> {
    inner: W,
}

impl<W: Write> GazeWriter<W> {
    pub fn new(mut inner: W) -> io::Result<Self> {
        inner.write_all(&STREAM_MAGIC)?;
        Ok(Self { inner })
    }

    pub fn send(&mut self, s: &GazeSample) -> io::Result<()> {
        let rec = encode_sample(s).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        self.inner.write_all(&rec)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}
