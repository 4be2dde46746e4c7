//! On-disk formats.
//!
//! `RBT1` tensor blob (all integers and floats little-endian):
//!
//! ```text
//! b"RBT1" | u32 N | u64 dims[N] | c1 as (re, im) f64 pairs | c2 likewise
//! ```
//!
//! Channel data is in column-major linear order. Mask blobs use the same
//! layout with magic `RBM1`, followed by `u64 seed`, `f64 sr` and one byte
//! (0 or 1) per linear index.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{RbError, Result};
use crate::tensor::{IndexMask, RbTensor};

pub const TENSOR_MAGIC: &[u8; 4] = b"RBT1";
pub const MASK_MAGIC: &[u8; 4] = b"RBM1";

// Upper bound on the element count accepted from a header.
const MAX_ELEMENTS: u64 = 1 << 34;

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn write_header(w: &mut impl Write, magic: &[u8; 4], dims: &[usize]) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<Vec<usize>> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(RbError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let n = read_u32(r)?;
    if n == 0 || n > 64 {
        return Err(RbError::Format(format!("unsupported tensor order {n}")));
    }
    let mut dims = Vec::with_capacity(n as usize);
    let mut total: u64 = 1;
    for _ in 0..n {
        let d = read_u64(r)?;
        total = total.saturating_mul(d);
        dims.push(d as usize);
    }
    if total == 0 || total > MAX_ELEMENTS {
        return Err(RbError::Format(format!("implausible dims {dims:?}")));
    }
    Ok(dims)
}

pub fn write_tensor(w: &mut impl Write, t: &RbTensor) -> Result<()> {
    write_header(w, TENSOR_MAGIC, t.dims())?;
    let mut buf = Vec::with_capacity(32 * t.len());
    for z in t.c1().iter().chain(t.c2()) {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor(r: &mut impl Read) -> Result<RbTensor> {
    let dims = read_header(r, TENSOR_MAGIC)?;
    let len: usize = dims.iter().product();
    let mut read_channel = || -> Result<Vec<Complex64>> {
        let mut bytes = vec![0u8; 16 * len];
        r.read_exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect())
    };
    let c1 = read_channel()?;
    let c2 = read_channel()?;
    RbTensor::from_channels(&dims, c1, c2)
}

pub fn tensor_to_bytes(t: &RbTensor) -> Vec<u8> {
    let mut out = Vec::new();
    write_tensor(&mut out, t).expect("writing to a Vec cannot fail");
    out
}

pub fn save_tensor(path: &Path, t: &RbTensor) -> Result<()> {
    write_atomic(path, &tensor_to_bytes(t))
}

pub fn load_tensor(path: &Path) -> Result<RbTensor> {
    let bytes = fs::read(path)?;
    read_tensor(&mut bytes.as_slice())
}

pub fn write_mask(w: &mut impl Write, mask: &IndexMask, seed: u64, sr: f64) -> Result<()> {
    write_header(w, MASK_MAGIC, mask.dims())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&sr.to_le_bytes())?;
    let bytes: Vec<u8> = mask.observed().iter().map(|&b| b as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Returns the mask with its `(seed, sr)` metadata.
pub fn read_mask(r: &mut impl Read) -> Result<(IndexMask, u64, f64)> {
    let dims = read_header(r, MASK_MAGIC)?;
    let seed = read_u64(r)?;
    let sr = read_f64(r)?;
    let len: usize = dims.iter().product();
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes)?;
    let observed = bytes
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(RbError::Format(format!("mask byte {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok((IndexMask::new(&dims, observed)?, seed, sr))
}

pub fn save_mask(path: &Path, mask: &IndexMask, seed: u64, sr: f64) -> Result<()> {
    let mut out = Vec::new();
    write_mask(&mut out, mask, seed, sr)?;
    write_atomic(path, &out)
}

pub fn load_mask(path: &Path) -> Result<(IndexMask, u64, f64)> {
    let bytes = fs::read(path)?;
    read_mask(&mut bytes.as_slice())
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| RbError::arg(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
