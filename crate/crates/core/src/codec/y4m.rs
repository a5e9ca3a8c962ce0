//! YUV4MPEG2 reading and writing (progressive 4:2:0 and mono, 8-bit).

use std::io::{BufRead, Read, Write};

use crate::fovea::FrameGeometry;

use super::{chroma_size, CodecError, Frame, CODEC_MB_SIZE, MAX_DIM};

const SIGNATURE: &str = "YUV4MPEG2";
const MAX_LINE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Y4mColor {
    C420,
    Mono,
}

/// Stream header. The original parameter tokens are kept so a file can be
/// written back unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mHeader {
    pub geometry: FrameGeometry,
    pub color: Y4mColor,
    pub fps: (u32, u32),
    tokens: Vec<String>,
}

impl Y4mHeader {
    pub fn new(geometry: FrameGeometry, color: Y4mColor, fps: (u32, u32)) -> Self {
        let cs = match color {
            Y4mColor::C420 => "C420jpeg",
            Y4mColor::Mono => "Cmono",
        };
        let tokens = vec![
            format!("W{}", geometry.width_px()),
            format!("H{}", geometry.height_px()),
            format!("F{}:{}", fps.0, fps.1),
            "Ip".to_string(),
            "A1:1".to_string(),
            cs.to_string(),
        ];
        Self {
            geometry,
            color,
            fps,
            tokens,
        }
    }

    pub fn parse(line: &str) -> Result<Self, CodecError> {
        let fmt = |m: String| CodecError::Format(m);
        let mut parts = line.split_ascii_whitespace();
        if parts.next() != Some(SIGNATURE) {
            return Err(fmt("missing YUV4MPEG2 signature".into()));
        }
        let tokens: Vec<String> = parts.map(str::to_string).collect();
        let (mut width, mut height) = (None, None);
        let mut color = Y4mColor::C420;
        let mut fps = (25, 1);
        for t in &tokens {
            let Some(tag) = t.chars().next() else { continue };
            let val = &t[tag.len_utf8()..];
            match tag {
                'W' => width = Some(val.parse::<u32>().map_err(|_| fmt(format!("bad width {val:?}")))?),
                'H' => height = Some(val.parse::<u32>().map_err(|_| fmt(format!("bad height {val:?}")))?),
                'F' => {
                    let (n, d) = val
                        .split_once(':')
                        .and_then(|(n, d)| Some((n.parse().ok()?, d.parse().ok()?)))
                        .filter(|&(n, d): &(u32, u32)| n > 0 && d > 0)
                        .ok_or_else(|| fmt(format!("bad frame rate {val:?}")))?;
                    fps = (n, d);
                }
                'I' => {
                    if val != "p" {
                        return Err(fmt(format!("interlacing {val:?} not supported, progressive only")));
                    }
                }
                'C' => {
                    color = match val {
                        "420" | "420jpeg" | "420paldv" | "420mpeg2" => Y4mColor::C420,
                        "mono" => Y4mColor::Mono,
                        other => return Err(fmt(format!("unsupported colour space C{other}"))),
                    }
                }
                _ => {}
            }
        }
        let (w, h) = match (width, height) {
            (Some(w), Some(h)) => (w, h),
            _ => return Err(fmt("header lacks W or H".into())),
        };
        if w > MAX_DIM || h > MAX_DIM {
            return Err(fmt(format!("{w}x{h} exceeds {MAX_DIM}px")));
        }
        let geometry = FrameGeometry::new(w, h, CODEC_MB_SIZE).map_err(|e| fmt(e.to_string()))?;
        Ok(Self {
            geometry,
            color,
            fps,
            tokens,
        })
    }

    pub fn to_line(&self) -> String {
        let mut s = SIGNATURE.to_string();
        for t in &self.tokens {
            s.push(' ');
            s.push_str(t);
        }
        s
    }

    fn frame_bytes(&self) -> usize {
        let luma = self.geometry.pixel_count();
        match self.color {
            Y4mColor::Mono => luma,
            Y4mColor::C420 => {
                let (cw, ch) = chroma_size(&self.geometry);
                luma + 2 * cw as usize * ch as usize
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Y4mVideo {
    pub header: Y4mHeader,
    pub frames: Vec<Frame>,
}

/// Reads one `\n`-terminated line; `None` at clean end of input.
fn read_line<R: BufRead>(r: &mut R) -> Result<Option<String>, CodecError> {
    let mut buf = Vec::new();
    let n = r.by_ref().take(MAX_LINE as u64).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') {
        return Err(CodecError::Format("unterminated or overlong header line".into()));
    }
    buf.pop();
    String::from_utf8(buf)
        .map(Some)
        .map_err(|_| CodecError::Format("header line is not ASCII".into()))
}

pub fn read_y4m<R: BufRead>(mut r: R) -> Result<Y4mVideo, CodecError> {
    let line = read_line(&mut r)?.ok_or_else(|| CodecError::Format("empty input".into()))?;
    let header = Y4mHeader::parse(&line)?;
    let geom = header.geometry;
    let (cw, ch) = chroma_size(&geom);
    let luma_len = geom.pixel_count();
    let chroma_len = cw as usize * ch as usize;
    let mut frames = Vec::new();
    while let Some(marker) = read_line(&mut r)? {
        if !(marker == "FRAME" || marker.starts_with("FRAME ")) {
            return Err(CodecError::Format(format!(
                "expected FRAME marker before frame {}",
                frames.len()
            )));
        }
        let mut data = vec![0u8; header.frame_bytes()];
        r.read_exact(&mut data).map_err(|_| {
            CodecError::Format(format!(
                "frame {} shorter than {} bytes for {}",
                frames.len(),
                header.frame_bytes(),
                geom
            ))
        })?;
        let frame = match header.color {
            Y4mColor::Mono => Frame::mono(geom, data)?,
            Y4mColor::C420 => {
                let cr = data.split_off(luma_len + chroma_len);
                let cb = data.split_off(luma_len);
                Frame::yuv420(geom, data, cb, cr)?
            }
        };
        frames.push(frame);
    }
    Ok(Y4mVideo { header, frames })
}

pub fn write_y4m<W: Write>(mut w: W, header: &Y4mHeader, frames: &[Frame]) -> Result<(), CodecError> {
    writeln!(w, "{}", header.to_line())?;
    for (i, f) in frames.iter().enumerate() {
        if *f.geometry() != header.geometry {
            return Err(CodecError::Format(format!(
                "frame {i} is {}, header says {}",
                f.geometry(),
                header.geometry
            )));
        }
        w.write_all(b"FRAME\n")?;
        w.write_all(f.luma())?;
        match (header.color, f.chroma()) {
            (Y4mColor::C420, Some((cb, cr))) => {
                w.write_all(cb)?;
                w.write_all(cr)?;
            }
            (Y4mColor::C420, None) => {
                // mono frame in a 4:2:0 stream: neutral chroma
                let (cw, ch) = chroma_size(&header.geometry);
                w.write_all(&vec![128u8; 2 * cw as usize * ch as usize])?;
            }
            (Y4mColor::Mono, _) => {}
        }
    }
    w.flush()?;
    Ok(())
}
