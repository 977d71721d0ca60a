//! Portable graymap (PGM) masks, both ASCII (P2) and binary (P5).
//! A pixel is foreground when its value is at least half the maximum.

use crate::error::CliError;
use crate::io::{atomic_write, read_bytes};
use aggmorph::RasterMask;
use std::path::Path;

/// Reads a P2 or P5 graymap as a binary mask; `pixel_pitch` optionally
/// assigns a physical size to one pixel.
pub fn parse_mask(path: &Path, pixel_pitch: Option<f64>) -> Result<RasterMask, CliError> {
    let bytes = read_bytes(path)?;
    let unsupported = |reason: &str| CliError::UnsupportedFormat {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let truncated = |reason: &str| CliError::TruncatedFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };

    let magic = bytes
        .get(0..2)
        .ok_or_else(|| truncated("no magic number"))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(unsupported("magic number is not P2 or P5")),
    };

    let mut pos = 2usize;
    let mut header = [0usize; 3];
    for slot in &mut header {
        *slot = next_header_number(&bytes, &mut pos)
            .ok_or_else(|| truncated("header ends before width, height, and maxval"))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(unsupported("image has zero size"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(unsupported("maxval must be between 1 and 65535"));
    }

    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if binary {
        // A single whitespace byte separates the header from the raster.
        pos += 1;
        let wide = maxval > 255;
        let per = if wide { 2 } else { 1 };
        let raster = bytes
            .get(pos..pos + n * per)
            .ok_or_else(|| truncated("raster is shorter than width * height"))?;
        for i in 0..n {
            let v = if wide {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as usize
            } else {
                raster[i] as usize
            };
            values.push(v);
        }
    } else {
        for _ in 0..n {
            let v = next_header_number(&bytes, &mut pos)
                .ok_or_else(|| truncated("fewer pixel values than width * height"))?;
            values.push(v);
        }
    }
    if values.iter().any(|&v| v > maxval) {
        return Err(CliError::MalformedRecord {
            path: path.display().to_string(),
            line: 0,
            reason: "pixel value exceeds maxval".to_string(),
        });
    }

    let pixels: Vec<bool> = values.iter().map(|&v| 2 * v >= maxval).collect();
    RasterMask::from_pixels(width, height, pixels, pixel_pitch)
        .map_err(|e| CliError::invalid(path.display().to_string(), e))
}

/// Reads the next unsigned integer, skipping whitespace and # comments.
fn next_header_number(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            b if b.is_ascii_digit() => {
                let mut value = 0usize;
                while let Some(d) = bytes.get(*pos).filter(|b| b.is_ascii_digit()) {
                    value = value.checked_mul(10)?.checked_add((d - b'0') as usize)?;
                    *pos += 1;
                }
                return Some(value);
            }
            _ => return None,
        }
    }
}

/// Writes a mask as ASCII P2, foreground as 255 on black.
pub fn write_pgm_p2(path: &Path, mask: &RasterMask) -> Result<(), CliError> {
    let mut out = format!("P2\n{} {}\n255\n", mask.width(), mask.height());
    for y in 0..mask.height() {
        let row: Vec<&str> = (0..mask.width())
            .map(|x| if mask.is_foreground(x, y) { "255" } else { "0" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Writes a mask as binary P5, foreground as 255 on black.
pub fn write_pgm_p5(path: &Path, mask: &RasterMask) -> Result<(), CliError> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            out.push(if mask.is_foreground(x, y) { 255 } else { 0 });
        }
    }
    atomic_write(path, &out)
}
