//! Binary table records.
//!
//! A file is a sequence of records, each laid out as
//!
//! ```text
//! magic     6 bytes  "WBSDF1"
//! mode      u8       0 = transmissive, 1 = reflective
//! boundary  u8       0 = zero, 1 = periodic
//! n_x       u64 LE
//! n_u       u64 LE
//! x0 dx u0 du lambda   f64 LE each
//! values    n_x * n_u f64 LE, x outer
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{Boundary, WignerTable};
use crate::microstructure::{Mode, Wavelength};

pub const MAGIC: &[u8; 6] = b"WBSDF1";

pub fn write_table(mut w: impl Write, table: &WignerTable, lambda: Wavelength, mode: Mode) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[
        match mode {
            Mode::Transmissive => 0,
            Mode::Reflective => 1,
        },
        match table.boundary() {
            Boundary::Zero => 0,
            Boundary::Periodic => 1,
        },
    ])?;
    w.write_all(&(table.n_x() as u64).to_le_bytes())?;
    w.write_all(&(table.n_u() as u64).to_le_bytes())?;
    for v in [table.x0(), table.dx(), table.u0(), table.du(), lambda.meters()] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in table.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_or_eof(r: &mut impl Read, buf: &mut [u8]) -> Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        let k = r.read(&mut buf[got..])?;
        if k == 0 {
            if got == 0 {
                return Ok(false);
            }
            return Err(Error::Data("truncated table record".into()));
        }
        got += k;
    }
    Ok(true)
}

fn u64_at(b: &[u8]) -> u64 {
    u64::from_le_bytes(b.try_into().expect("8 bytes"))
}

fn f64_at(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().expect("8 bytes"))
}

/// Reads every record of a table file.
pub fn read_tables(mut r: impl Read) -> Result<Vec<(WignerTable, Wavelength, Mode)>> {
    let mut out = Vec::new();
    loop {
        let mut head = [0u8; 6 + 2 + 16 + 40];
        if !read_exact_or_eof(&mut r, &mut head)? {
            break;
        }
        if &head[..6] != MAGIC {
            return Err(Error::Data("bad table magic".into()));
        }
        let mode = match head[6] {
            0 => Mode::Transmissive,
            1 => Mode::Reflective,
            m => return Err(Error::Data(format!("unknown mode byte {m}"))),
        };
        let boundary = match head[7] {
            0 => Boundary::Zero,
            1 => Boundary::Periodic,
            b => return Err(Error::Data(format!("unknown boundary byte {b}"))),
        };
        let n_x = u64_at(&head[8..16]) as usize;
        let n_u = u64_at(&head[16..24]) as usize;
        let f: Vec<f64> = (0..5).map(|i| f64_at(&head[24 + 8 * i..32 + 8 * i])).collect();
        let count =
            n_x.checked_mul(n_u).filter(|c| *c <= 1 << 31).ok_or_else(|| Error::Data("table too large".into()))?;
        let mut raw = vec![0u8; count * 8];
        if !read_exact_or_eof(&mut r, &mut raw)? && count > 0 {
            return Err(Error::Data("truncated table record".into()));
        }
        let values = raw.chunks_exact(8).map(f64_at).collect();
        let table = WignerTable::new(values, n_x, n_u, f[0], f[1], f[2], f[3], boundary)?;
        out.push((table, Wavelength::new(f[4])?, mode));
    }
    Ok(out)
}
