//! Binary dump of a [`NoiseBatch`]. All integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "SPDENOIS"
//! version  u32      1
//! dim      u32
//! n_x      u32
//! n_t      u32
//! length   f64
//! dt       f64
//! seed     u64
//! klen     u32      byte length of the kernel spec
//! kernel   klen     UTF-8, e.g. "riesz{beta=1}"
//! modes    n_t × n_x^dim × (f32 re, f32 im), steps outer, flat FFT order inner
//! ```

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use super::{GridSpec, Lattice, NoiseBatch};
use crate::error::{Error, Result};
use crate::spectral_measure::CorrelationKernel;

pub const MAGIC: &[u8; 8] = b"SPDENOIS";
pub const VERSION: u32 = 1;

pub fn write_batch<W: Write>(batch: &NoiseBatch, mut out: W) -> Result<()> {
    let g = batch.grid();
    out.write_all(MAGIC)?;
    for v in [VERSION, g.dim as u32, g.n_x as u32, g.n_t as u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&g.length.to_le_bytes())?;
    out.write_all(&g.dt.to_le_bytes())?;
    out.write_all(&batch.seed().to_le_bytes())?;
    let spec = batch.kernel().to_string();
    out.write_all(&(spec.len() as u32).to_le_bytes())?;
    out.write_all(spec.as_bytes())?;
    let mut buf = Vec::with_capacity(8 * batch.coeffs().len());
    for c in batch.coeffs() {
        buf.extend_from_slice(&(c.re as f32).to_le_bytes());
        buf.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn u32_field<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

fn malformed(reason: &str) -> Error {
    Error::Parse {
        input: "noise dump".into(),
        reason: reason.into(),
    }
}

/// Reads a dump back. Mode values come back at f32 precision.
pub fn read_batch<R: Read>(mut r: R) -> Result<NoiseBatch> {
    if &take::<8, _>(&mut r)? != MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32_field(&mut r)?;
    if version != VERSION {
        return Err(malformed(&format!("unsupported version {version}")));
    }
    let dim = u32_field(&mut r)? as usize;
    let n_x = u32_field(&mut r)? as usize;
    let n_t = u32_field(&mut r)? as usize;
    let length = f64::from_le_bytes(take(&mut r)?);
    let dt = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let klen = u32_field(&mut r)? as usize;
    if klen > 4096 {
        return Err(malformed("kernel spec too long"));
    }
    let mut spec = vec![0u8; klen];
    r.read_exact(&mut spec)?;
    let spec = String::from_utf8(spec).map_err(|_| malformed("kernel spec is not UTF-8"))?;
    let grid = GridSpec::new(dim, length, n_x, dt, n_t)?;
    let kernel = CorrelationKernel::parse(&spec, dim)?;
    let count = grid.n_points() * n_t;
    let mut raw = vec![0u8; 8 * count];
    r.read_exact(&mut raw)?;
    let coeffs = raw
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let lattice = Arc::new(Lattice::new(grid, kernel)?);
    Ok(NoiseBatch::from_parts(lattice, seed, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip(seed in any::<u64>(), beta in 0.2f64..0.9, n_t in 1usize..4) {
            let g = GridSpec::new(1, 5.0, 16, 0.1, n_t).unwrap();
            let k = CorrelationKernel::riesz(beta, 1).unwrap();
            let batch = NoiseBatch::sample_increments(g, k, seed).unwrap();
            let mut bytes = Vec::new();
            write_batch(&batch, &mut bytes).unwrap();
            prop_assert_eq!(bytes.len(), 8 + 16 + 24 + 4 + k.to_string().len() + 8 * 16 * n_t);
            let back = read_batch(bytes.as_slice()).unwrap();
            prop_assert_eq!(back.seed(), seed);
            prop_assert_eq!(back.grid(), batch.grid());
            prop_assert_eq!(back.kernel().to_string(), k.to_string());
            for (a, b) in batch.coeffs().iter().zip(back.coeffs()) {
                prop_assert!((a - b).norm() <= 1e-6 * a.norm().max(1e-30));
            }
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(read_batch(&b"NOTNOISEXXXXXXXXXXXXXXXXXXXXXX"[..]).is_err());
        let g = GridSpec::new(1, 5.0, 8, 0.1, 1).unwrap();
        let batch = NoiseBatch::sample_increments(g, CorrelationKernel::white_noise(1), 1).unwrap();
        let mut bytes = Vec::new();
        write_batch(&batch, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(read_batch(bytes.as_slice()).is_err());
    }
}
