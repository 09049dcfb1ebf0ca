// SPDX-License-Identifier: Apache-2.0

//! Binary checkpoints. All integers little-endian:
//!
//! ```text
//! magic    8 bytes  "PLRLCKPT"
//! version  u32      1
//! count    u32      number of parameter records
//! record:
//!   name_len u32, name (UTF-8, name_len bytes)
//!   dtype    u8     0 = f32, 1 = f64
//!   rank     u8     0..=4
//!   dims     rank x u64
//!   payload  product(dims) values of the dtype
//! ```

use std::io::{self, Read, Write};
use std::path::Path;

use placerl_core::Scalar;
use thiserror::Error;

use super::{Params, Tensor};

pub const MAGIC: &[u8; 8] = b"PLRLCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

pub fn write_params<T: Scalar, W: Write>(params: &Params<T>, mut out: W) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(params.tensors.len() as u32).to_le_bytes())?;
    for (name, t) in params.names.iter().zip(&params.tensors) {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&[T::DTYPE_TAG, t.shape.len() as u8])?;
        for &d in &t.shape {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in &t.data {
            match T::DTYPE_TAG {
                0 => out.write_all(&(v.as_f64() as f32).to_le_bytes())?,
                _ => out.write_all(&v.as_f64().to_le_bytes())?,
            }
        }
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N], CheckpointError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

/// Reads a checkpoint, converting values to `T` when the stored dtype
/// differs.
pub fn read_params<T: Scalar, R: Read>(mut r: R) -> Result<Params<T>, CheckpointError> {
    if &take::<8>(&mut r)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let count = u32::from_le_bytes(take(&mut r)?);
    let mut params = Params::new();
    for _ in 0..count {
        let len = u32::from_le_bytes(take(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| CheckpointError::Corrupt("name is not UTF-8".into()))?;
        let [dtype, rank] = take::<2>(&mut r)?;
        if rank > 4 {
            return Err(CheckpointError::Corrupt(format!("{name}: rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(take(&mut r)?) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let v = match dtype {
                0 => f32::from_le_bytes(take(&mut r)?) as f64,
                1 => f64::from_le_bytes(take(&mut r)?),
                d => return Err(CheckpointError::Corrupt(format!("{name}: dtype {d}"))),
            };
            data.push(T::of(v));
        }
        if params.names.contains(&name) {
            return Err(CheckpointError::Corrupt(format!("duplicate parameter {name}")));
        }
        params.push(name, Tensor { shape, data });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    Ok(params)
}

pub fn save<T: Scalar>(params: &Params<T>, path: &Path) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    write_params(params, &mut f)?;
    f.flush()
}

pub fn load<T: Scalar>(path: &Path) -> Result<Params<T>, CheckpointError> {
    read_params(io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Params<f32> {
        let mut p = Params::new();
        p.push("a.w", Tensor::from_vec(&[2, 1, 1, 2], vec![1.5, -2.0, 0.25, 3.0]).unwrap());
        p.push("b", Tensor::from_vec(&[], vec![7.0]).unwrap());
        p
    }

    #[test]
    fn byte_layout() {
        let mut buf = Vec::new();
        write_params(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(&buf[8..16], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&buf[16..20], &[3, 0, 0, 0]);
        assert_eq!(&buf[20..23], b"a.w");
        assert_eq!(&buf[23..25], &[0, 4]);
        let header = 8 + 4 + 4;
        let rec_a = 4 + 3 + 2 + 4 * 8 + 4 * 4;
        let rec_b = 4 + 1 + 2 + 4;
        assert_eq!(buf.len(), header + rec_a + rec_b);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let mut a = Vec::new();
        write_params(&sample(), &mut a).unwrap();
        let back: Params<f32> = read_params(&a[..]).unwrap();
        assert_eq!(back, sample());
        let mut b = Vec::new();
        write_params(&back, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_params::<f64, _>(&b"NOTACKPT\x01\0\0\0\0\0\0\0"[..]), Err(CheckpointError::BadMagic)));
        let mut a = Vec::new();
        write_params(&sample(), &mut a).unwrap();
        a.push(0);
        assert!(matches!(read_params::<f32, _>(&a[..]), Err(CheckpointError::Corrupt(_))));
        assert!(read_params::<f32, _>(&a[..10]).is_err());
    }
}
