//! Grayscale images: binary PGM I/O and a synthetic head phantom.

use std::path::Path;

use ndarray::Array2;

use crate::{CimError, Result};

/// Parses a binary (P5) PGM with maxval ≤ 255; pixels are scaled to [0, 1].
pub fn parse_pgm(bytes: &[u8]) -> Result<Array2<f64>> {
    let bad = |msg: &str| CimError::Format(format!("pgm: {msg}"));
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header field"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("missing raster separator")),
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit maxval (1..=255) is supported"));
    }
    if width == 0 || height == 0 {
        return Err(bad("empty image"));
    }
    let raster = &bytes[pos..];
    if raster.len() != width * height {
        return Err(bad(&format!("expected {} raster bytes, found {}", width * height, raster.len())));
    }
    let scale = maxval as f64;
    Ok(Array2::from_shape_fn((height, width), |(r, c)| raster[r * width + c] as f64 / scale))
}

/// Encodes with maxval 255, clamping to [0, 1] and rounding to nearest.
pub fn encode_pgm(image: &Array2<f64>) -> Vec<u8> {
    let (h, w) = image.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(image.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn read_pgm(path: &Path) -> Result<Array2<f64>> {
    parse_pgm(&std::fs::read(path)?)
}

pub fn write_pgm(path: &Path, image: &Array2<f64>) -> Result<()> {
    std::fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// Shepp–Logan-style phantom with intensities in [0, 1], quantised to
/// 8 bits so it survives a PGM round trip unchanged.
pub fn phantom(side: usize) -> Array2<f64> {
    // (value, centre x, centre y, semi-axis a, semi-axis b, rotation in degrees)
    const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
        (1.0, 0.0, 0.0, 0.69, 0.92, 0.0),
        (-0.8, 0.0, -0.0184, 0.6624, 0.874, 0.0),
        (-0.2, 0.22, 0.0, 0.11, 0.31, -18.0),
        (-0.2, -0.22, 0.0, 0.16, 0.41, 18.0),
        (0.1, 0.0, 0.35, 0.21, 0.25, 0.0),
        (0.1, 0.0, 0.1, 0.046, 0.046, 0.0),
        (0.1, 0.0, -0.1, 0.046, 0.046, 0.0),
        (0.1, -0.08, -0.605, 0.046, 0.023, 0.0),
        (0.1, 0.0, -0.605, 0.023, 0.023, 0.0),
        (0.1, 0.06, -0.605, 0.023, 0.046, 0.0),
    ];
    let mut img = Array2::from_shape_fn((side, side), |(r, c)| {
        let x = (2.0 * c as f64 + 1.0) / side as f64 - 1.0;
        let y = 1.0 - (2.0 * r as f64 + 1.0) / side as f64;
        ELLIPSES
            .iter()
            .filter(|&&(_, cx, cy, a, b, deg)| {
                let (s, co) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let u = dx * co + dy * s;
                let v = -dx * s + dy * co;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            })
            .map(|e| e.0)
            .sum::<f64>()
    });
    img.mapv_inplace(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0);
    img
}

/// `phantom` smoothed by `passes` periodic 3×3 binomial blurs, requantised
/// to 8 bits.
pub fn smooth_phantom(side: usize, passes: usize) -> Array2<f64> {
    let mut img = phantom(side);
    let n = side as isize;
    let at = |a: &Array2<f64>, r: isize, c: isize| a[[r.rem_euclid(n) as usize, c.rem_euclid(n) as usize]];
    for _ in 0..passes {
        let src = img.clone();
        img = Array2::from_shape_fn((side, side), |(r, c)| {
            let (r, c) = (r as isize, c as isize);
            let mut acc = 0.0;
            for (dr, wr) in [(-1, 1.0), (0, 2.0), (1, 1.0)] {
                for (dc, wc) in [(-1, 1.0), (0, 2.0), (1, 1.0)] {
                    acc += wr * wc * at(&src, r + dr, c + dc);
                }
            }
            acc / 16.0
        });
    }
    img.mapv_inplace(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0);
    img
}

/// One sorted index per line.
pub fn write_index_list(path: &Path, indices: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(indices.len() * 6);
    for i in indices {
        s.push_str(&i.to_string());
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_index_list(path: &Path) -> Result<Vec<usize>> {
    std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse().map_err(|_| CimError::Format(format!("mask: bad index {l:?}"))))
        .collect()
}
