//! Minimal binary PGM (P5) writer for 8-bit visualizations.

use std::io::{self, Write};

pub fn write_pgm<W: Write>(mut out: W, width: u32, height: u32, pixels: &[u8]) -> io::Result<()> {
    if pixels.len() != width as usize * height as usize {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{} pixels for a {width}x{height} image", pixels.len()),
        ));
    }
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(pixels)
}
