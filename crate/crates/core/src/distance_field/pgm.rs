//! Minimal reader for binary (P5) and ASCII (P2) portable graymaps.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub max_value: u16,
    /// Row-major, first row is the top of the image.
    pub pixels: Vec<u16>,
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Pgm::parse(&bytes).map_err(|msg| Error::parse(path, msg))
}

impl Pgm {
    pub fn parse(bytes: &[u8]) -> std::result::Result<Pgm, String> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos).ok_or("missing magic number")?;
        let binary = match magic {
            b"P5" => true,
            b"P2" => false,
            other => return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(other))),
        };
        let mut header = [0usize; 3];
        for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
            let tok = next_token(bytes, &mut pos).ok_or_else(|| format!("missing {name}"))?;
            *slot = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("bad {name}"))?;
        }
        let [width, height, max_value] = header;
        if width == 0 || height == 0 || max_value == 0 || max_value > 65535 {
            return Err(format!("bad header {width}x{height} max {max_value}"));
        }
        let n = width * height;
        let pixels = if binary {
            // Exactly one whitespace byte separates the header from the raster.
            pos += 1;
            let wide = max_value > 255;
            let need = if wide { 2 * n } else { n };
            let raster = bytes.get(pos..pos + need).ok_or("truncated raster")?;
            if wide {
                raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            } else {
                raster.iter().map(|&b| b as u16).collect()
            }
        } else {
            let mut px = Vec::with_capacity(n);
            for _ in 0..n {
                let tok = next_token(bytes, &mut pos).ok_or("truncated raster")?;
                let v: u16 = std::str::from_utf8(tok)
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or("bad pixel value")?;
                px.push(v);
            }
            px
        };
        Ok(Pgm { width, height, max_value: max_value as u16, pixels })
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}
