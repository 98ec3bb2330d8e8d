//! Binary checkpoint format for named parameter tensors.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   4 bytes  "STGW"
//! version u16      currently 1
//! count   u32      number of parameters
//! then per parameter:
//!   name_len u32, name (UTF-8)
//!   rank     u32, dims (u32 each)
//!   values   f32 each, row-major
//! ```
//!
//! Values are stored in 32-bit precision regardless of the in-memory type.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"STGW";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic, expected \"STGW\"")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("parameter name is not valid UTF-8")]
    BadName,
    #[error("checkpoint ends before its declared contents")]
    Truncated,
    #[error("trailing bytes after the declared contents")]
    TrailingBytes,
    #[error("parameter {0:?} does not fit 32-bit storage")]
    NonFinite(String),
}

pub fn save_checkpoint<W: Write>(
    mut w: W,
    params: &[(String, Tensor)],
) -> Result<(), CheckpointError> {
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &value in tensor.data() {
            let narrow = value as f32;
            if !narrow.is_finite() {
                return Err(CheckpointError::NonFinite(name.clone()));
            }
            w.write_all(&narrow.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), CheckpointError> {
        r.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                CheckpointError::Truncated
            } else {
                CheckpointError::Io(e)
            }
        })
    }
    fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
        let mut buf = [0u8; 4];
        read_exact_or_truncated(r, &mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }

    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut version = [0u8; 2];
    read_exact_or_truncated(&mut r, &mut version)?;
    let version = u16::from_le_bytes(version);
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let count = read_u32(&mut r)? as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name_buf = vec![0u8; name_len];
        read_exact_or_truncated(&mut r, &mut name_buf)?;
        let name = String::from_utf8(name_buf).map_err(|_| CheckpointError::BadName)?;
        let rank = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        let mut buf = [0u8; 4];
        for _ in 0..numel {
            read_exact_or_truncated(&mut r, &mut buf)?;
            let value = f32::from_le_bytes(buf) as f64;
            if !value.is_finite() {
                return Err(CheckpointError::NonFinite(name.clone()));
            }
            data.push(value);
        }
        params.push((name, Tensor::from_parts(shape, data)));
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(params),
        _ => Err(CheckpointError::TrailingBytes),
    }
}

pub fn write_checkpoint_file<P: AsRef<Path>>(
    path: P,
    params: &[(String, Tensor)],
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    save_checkpoint(&mut w, params)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint_file<P: AsRef<Path>>(
    path: P,
) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    load_checkpoint(BufReader::new(File::open(path)?))
}
