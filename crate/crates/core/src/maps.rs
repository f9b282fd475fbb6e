//! Grayscale guidance maps (edge and attention maps) read from PGM files.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grid of values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl GrayMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation("map dimensions must be positive".into()));
        }
        if values.len() != width * height {
            return Err(Error::Validation(format!(
                "{} values for a {width}x{height} map",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("map values must lie in [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

pub fn load_pgm(path: &Path) -> Result<GrayMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, &path.display().to_string())
}

/// Reads binary (P5) or ASCII (P2) PGM with 8- or 16-bit samples, scaling
/// by `maxval` into `[0, 1]`.
pub fn parse_pgm(bytes: &[u8], context: &str) -> Result<GrayMap> {
    let mut pos = 0usize;
    let mut header = Vec::with_capacity(4);
    while header.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(context, "truncated PGM header"));
        }
        header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let binary = match header[0].as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(Error::parse(context, format!("unsupported magic '{other}'"))),
    };
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(context, format!("bad {what} '{s}'")))
    };
    let width = num(&header[1], "width")?;
    let height = num(&header[2], "height")?;
    let maxval = num(&header[3], "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(context, format!("maxval {maxval} out of range")));
    }
    let count = width * height;
    let scale = 1.0 / maxval as f64;
    let raw: Vec<usize> = if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let data = bytes
            .get(pos..pos + need)
            .ok_or_else(|| Error::parse(context, "truncated PGM raster"))?;
        if wide {
            data.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as usize)
                .collect()
        } else {
            data.iter().map(|&b| b as usize).collect()
        }
    } else {
        let text = String::from_utf8_lossy(&bytes[pos..]);
        let vals = text
            .split_ascii_whitespace()
            .take(count)
            .map(|s| num(s, "sample"))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() < count {
            return Err(Error::parse(context, "truncated PGM raster"));
        }
        vals
    };
    if let Some(v) = raw.iter().find(|&&v| v > maxval) {
        return Err(Error::parse(context, format!("sample {v} exceeds maxval {maxval}")));
    }
    GrayMap::new(
        width,
        height,
        raw.into_iter().map(|v| v as f64 * scale).collect(),
    )
}

/// Binary PGM encoding (8-bit when `maxval <= 255`).
pub fn encode_pgm(map: &GrayMap, maxval: u16) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", map.width, map.height, maxval).into_bytes();
    for v in &map.values {
        let q = (v * maxval as f64).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}
