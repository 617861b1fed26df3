//! Minimal binary PGM (P5) codec for 8-bit grayscale images.

use std::path::Path;

use crate::{Error, RealMatrix, Result};

/// An 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} pixels given for a {rows}x{cols} image",
                pixels.len()
            )));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn filled(rows: usize, cols: usize, level: u8) -> Result<Self> {
        Self::new(rows, cols, vec![level; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Gray levels as floats in [0, 255].
    pub fn to_matrix(&self) -> RealMatrix {
        RealMatrix::from_fn(self.rows, self.cols, |r, c| f64::from(self.pixels[r * self.cols + c]))
    }

    /// Rounds half away from zero, then clamps to [0, 255].
    pub fn from_matrix(m: &RealMatrix) -> Self {
        let pixels = m.as_slice().iter().map(|&v| quantize(v)).collect();
        Self {
            rows: m.rows(),
            cols: m.cols(),
            pixels,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        if bytes.get(..2) != Some(b"P5") {
            return Err(Error::format("not a binary PGM: missing P5 magic"));
        }
        pos += 2;
        let mut fields = [0usize; 3];
        for (i, field) in fields.iter_mut().enumerate() {
            *field = header_number(bytes, &mut pos)
                .ok_or_else(|| Error::format(format!("truncated or malformed PGM header (field {})", i + 1)))?;
        }
        let [cols, rows, maxval] = fields;
        if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(Error::format("PGM header must end with a single whitespace byte"));
        }
        pos += 1;
        if maxval == 0 || maxval > 255 {
            return Err(Error::format(format!(
                "unsupported PGM maxval {maxval}; only 8-bit images are read"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::format("PGM dimensions must be positive"));
        }
        let data = &bytes[pos..];
        let n = rows * cols;
        if data.len() < n {
            return Err(Error::format(format!(
                "PGM raster truncated: {} of {n} bytes",
                data.len()
            )));
        }
        let pixels = if maxval == 255 {
            data[..n].to_vec()
        } else {
            data[..n]
                .iter()
                .map(|&p| quantize(f64::from(p) * 255.0 / maxval as f64))
                .collect()
        };
        Ok(Self { rows, cols, pixels })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }
}

pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *bytes.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}
