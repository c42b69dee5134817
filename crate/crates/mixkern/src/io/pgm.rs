//! 8-bit grayscale PGM images (`P2` text and `P5` binary).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

/// Splits whitespace-separated tokens, skipping `#` comments, starting at
/// byte `pos`. Returns the token and the position just after it.
fn next_token(bytes: &[u8], mut pos: usize) -> Option<(&[u8], usize)> {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    if pos >= bytes.len() {
        return None;
    }
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
        pos += 1;
    }
    Some((&bytes[start..pos], pos))
}

fn header_number(bytes: &[u8], pos: usize, what: &str) -> Result<(u32, usize)> {
    let (tok, next) =
        next_token(bytes, pos).ok_or_else(|| Error::CorruptHeader(format!("missing {what}")))?;
    let v = std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| {
            Error::CorruptHeader(format!("{what} `{}`", String::from_utf8_lossy(tok)))
        })?;
    Ok((v, next))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let (magic, pos) =
        next_token(bytes, 0).ok_or_else(|| Error::CorruptHeader("empty file".into()))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return Err(Error::UnsupportedFormat(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let (width, pos) = header_number(bytes, pos, "width")?;
    let (height, pos) = header_number(bytes, pos, "height")?;
    let (maxval, pos) = header_number(bytes, pos, "maxval")?;
    if width == 0 || height == 0 || maxval == 0 {
        return Err(Error::CorruptHeader(format!(
            "{width}x{height}, maxval {maxval}"
        )));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "16-bit PGM (maxval {maxval})"
        )));
    }
    Ok(Header {
        binary,
        width: width as usize,
        height: height as usize,
        maxval,
        // One whitespace byte separates the header from binary data.
        data_start: pos + 1,
    })
}

/// Reads a PGM image as a `height × width` matrix of intensities in
/// `[0, 255]`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_pgm(&fs::read(path)?)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Matrix> {
    let h = parse_header(bytes)?;
    let count = h.width * h.height;
    let scale = 255.0 / h.maxval as f64;
    let mut values = Vec::with_capacity(count);
    if h.binary {
        let data = bytes
            .get(h.data_start..h.data_start + count)
            .ok_or_else(|| Error::CorruptHeader("truncated pixel data".into()))?;
        values.extend(data.iter().map(|&b| b as f64 * scale));
    } else {
        let mut pos = h.data_start - 1;
        for _ in 0..count {
            let (v, next) = header_number(bytes, pos, "pixel")?;
            if v > h.maxval {
                return Err(Error::CorruptHeader(format!(
                    "pixel {v} exceeds maxval {}",
                    h.maxval
                )));
            }
            values.push(v as f64 * scale);
            pos = next;
        }
    }
    Ok(Matrix::from_vec(h.height, h.width, values))
}

/// Text (`P2`) encoding; values are clamped to `[0, 255]` and rounded half
/// to even.
pub fn pgm_bytes(image: &Matrix) -> Result<Vec<u8>> {
    if let Some(v) = image.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("pixel value {v}")));
    }
    let mut out = format!("P2\n{} {}\n255\n", image.cols(), image.rows());
    for r in 0..image.rows() {
        let line: Vec<String> = image
            .row(r)
            .iter()
            .map(|v| (v.clamp(0.0, 255.0).round_ties_even() as u8).to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out.into_bytes())
}

pub fn write_pgm(path: impl AsRef<Path>, image: &Matrix) -> Result<()> {
    fs::write(path, pgm_bytes(image)?)?;
    Ok(())
}
