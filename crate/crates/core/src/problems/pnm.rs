//! Binary netpbm I/O: 8-bit colour images (`P6`) and greyscale masks (`P5`).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::{ImageTensor, Mask, CHANNELS};

const MAXVAL: usize = 255;

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(start, format!("{what} out of range")))
    }
}

/// Decodes a binary `P6` image with maxval 255; intensities are divided by 255.
pub fn parse_ppm(bytes: &[u8]) -> Result<ImageTensor> {
    match bytes.get(..2) {
        Some(b"P6") => {}
        Some(m) => {
            return Err(parse_err(
                0,
                format!("unsupported magic '{}'", String::from_utf8_lossy(m)),
            ))
        }
        None => return Err(parse_err(0, "unsupported magic: file too short")),
    }
    let mut h = Header { bytes, pos: 2 };
    let cols = h.number("width")?;
    let rows = h.number("height")?;
    h.skip_space();
    let maxval_at = h.pos;
    let maxval = h.number("maxval")?;
    if maxval != MAXVAL {
        return Err(parse_err(
            maxval_at,
            format!("maxval {maxval} unsupported (need 255)"),
        ));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(parse_err(h.pos, "expected single whitespace after maxval")),
    }
    let need = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(CHANNELS))
        .ok_or_else(|| parse_err(0, "image dimensions overflow"))?;
    let payload = &bytes[h.pos..];
    if payload.len() < need {
        return Err(parse_err(
            bytes.len(),
            format!("truncated payload: {} of {need} bytes", payload.len()),
        ));
    }
    let data = payload[..need]
        .iter()
        .map(|&b| b as f64 / MAXVAL as f64)
        .collect();
    ImageTensor::from_vec(rows, cols, data)
}

fn quantize(v: f64) -> u8 {
    // round half up on the clamped value
    (v.clamp(0.0, 1.0) * MAXVAL as f64 + 0.5).floor() as u8
}

pub fn encode_ppm(img: &ImageTensor) -> Vec<u8> {
    let (rows, cols) = img.dims();
    let mut out = format!("P6\n{cols} {rows}\n{MAXVAL}\n").into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

/// Kept pixels are white, erased pixels black.
pub fn encode_pgm_mask(mask: &Mask) -> Vec<u8> {
    let (rows, cols) = mask.dims();
    let mut out = format!("P5\n{cols} {rows}\n{MAXVAL}\n").into_bytes();
    for i in 0..rows {
        for j in 0..cols {
            out.push(if mask.keeps(i, j) { MAXVAL as u8 } else { 0 });
        }
    }
    out
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_context(e, path))?;
    parse_ppm(&bytes)
}

pub fn write_ppm(path: impl AsRef<Path>, img: &ImageTensor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(img)).map_err(|e| io_context(e, path))
}

pub fn write_pgm_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm_mask(mask)).map_err(|e| io_context(e, path))
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}
