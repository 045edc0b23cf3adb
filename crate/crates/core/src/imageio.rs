//! PFM and PPM writers (and a PFM reader).
//!
//! PFM: header `PF\n<w> <h>\n-1.0\n`, then little-endian `f32` RGB triples,
//! rows from bottom to top. PPM: `P6` with 8-bit gamma-2.2 RGB, rows top to
//! bottom.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

pub fn write_pfm(mut w: impl Write, width: usize, height: usize, rgb: &[[f64; 3]]) -> Result<()> {
    if rgb.len() != width * height {
        return Err(Error::Argument("pixel count does not match image size".into()));
    }
    write!(w, "PF\n{width} {height}\n-1.0\n")?;
    let mut buf = Vec::with_capacity(width * height * 12);
    for y in (0..height).rev() {
        for px in &rgb[y * width..(y + 1) * width] {
            for c in px {
                buf.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// `(width, height, rgb)` with rows top to bottom.
pub fn read_pfm(r: impl Read) -> Result<(usize, usize, Vec<[f32; 3]>)> {
    let mut r = std::io::BufReader::new(r);
    let mut line = String::new();
    let mut next = |r: &mut std::io::BufReader<_>| -> Result<String> {
        line.clear();
        r.read_line(&mut line)?;
        Ok(line.trim().to_string())
    };
    if next(&mut r)? != "PF" {
        return Err(Error::Data("not a colour PFM".into()));
    }
    let dims = next(&mut r)?;
    let mut it = dims.split_whitespace().map(|s| s.parse::<usize>());
    let (Some(Ok(w)), Some(Ok(h))) = (it.next(), it.next()) else {
        return Err(Error::Data("bad PFM dimensions".into()));
    };
    let scale: f64 = next(&mut r)?.parse().map_err(|_| Error::Data("bad PFM scale".into()))?;
    if scale >= 0.0 {
        return Err(Error::Data("only little-endian PFM is supported".into()));
    }
    let mut raw = vec![0u8; w * h * 12];
    r.read_exact(&mut raw)?;
    let mut px: Vec<[f32; 3]> = raw
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[i..i + 4].try_into().expect("4 bytes"));
            [f(0), f(4), f(8)]
        })
        .collect();
    // stored bottom-up
    let rows: Vec<Vec<[f32; 3]>> = px.chunks(w).map(|c| c.to_vec()).collect();
    px = rows.into_iter().rev().flatten().collect();
    Ok((w, h, px))
}

/// 8-bit PPM with `value / white` mapped through gamma 2.2.
pub fn write_ppm(mut w: impl Write, width: usize, height: usize, rgb: &[[f64; 3]], white: f64) -> Result<()> {
    if rgb.len() != width * height {
        return Err(Error::Argument("pixel count does not match image size".into()));
    }
    write!(w, "P6\n{width} {height}\n255\n")?;
    let inv = if white > 0.0 { 1.0 / white } else { 0.0 };
    let bytes: Vec<u8> = rgb
        .iter()
        .flat_map(|px| px.map(|c| ((c * inv).clamp(0.0, 1.0).powf(1.0 / 2.2) * 255.0).round() as u8))
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}
