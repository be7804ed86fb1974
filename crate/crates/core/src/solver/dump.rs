//! Binary dump of a [`SolutionPath`], little-endian throughout:
//!
//! ```text
//! magic     8 bytes  "SPDEPATH"
//! version   u32      1
//! dim       u32
//! n_x       u32
//! n_t       u32
//! velocity  u32      1 if velocity fields follow each u_n, else 0
//! length    f64
//! dt        f64
//! seed      u64
//! fields    for n = 0..=n_t: u_n as n_x^dim f64, then v_n if velocity = 1
//! ```

use std::io::{Read, Write};

use super::SolutionPath;
use crate::error::{Error, Result};
use crate::noise::GridSpec;

pub const MAGIC: &[u8; 8] = b"SPDEPATH";
pub const VERSION: u32 = 1;

fn put_field<W: Write>(out: &mut W, field: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * field.len());
    for x in field {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn write_path<W: Write>(path: &SolutionPath, mut out: W) -> Result<()> {
    let g = &path.grid;
    out.write_all(MAGIC)?;
    let velocity = u32::from(path.v.is_some());
    for v in [
        VERSION,
        g.dim as u32,
        g.n_x as u32,
        path.steps() as u32,
        velocity,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&g.length.to_le_bytes())?;
    out.write_all(&g.dt.to_le_bytes())?;
    out.write_all(&path.noise_seed.to_le_bytes())?;
    for n in 0..path.u.len() {
        put_field(&mut out, &path.u[n])?;
        if let Some(v) = &path.v {
            put_field(&mut out, &v[n])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_field<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut raw = vec![0u8; 8 * len];
    r.read_exact(&mut raw)?;
    Ok(raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight bytes")))
        .collect())
}

pub fn read_path<R: Read>(mut r: R) -> Result<SolutionPath> {
    let bad = |reason: &str| Error::Parse {
        input: "path dump".into(),
        reason: reason.into(),
    };
    if &take::<8, _>(&mut r)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut header = [0u32; 5];
    for h in header.iter_mut() {
        *h = u32::from_le_bytes(take(&mut r)?);
    }
    let [version, dim, n_x, n_t, velocity] = header;
    if version != VERSION {
        return Err(bad("unsupported version"));
    }
    let length = f64::from_le_bytes(take(&mut r)?);
    let dt = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let grid = GridSpec::new(dim as usize, length, n_x as usize, dt, n_t as usize)?;
    let len = grid.n_points();
    let mut u = Vec::with_capacity(grid.n_t + 1);
    let mut v = (velocity == 1).then(Vec::new);
    for _ in 0..=grid.n_t {
        u.push(get_field(&mut r, len)?);
        if let Some(v) = v.as_mut() {
            v.push(get_field(&mut r, len)?);
        }
    }
    Ok(SolutionPath {
        grid,
        u,
        v,
        noise_seed: seed,
    })
}
