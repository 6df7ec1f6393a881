//! Binary checkpoint of a [`ParamSet`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "EVEXCKPT"
//! version  u32      1
//! count    u32      number of tensors
//! repeated count times:
//!   name_len u32, name (UTF-8)
//!   rank     u32, dims (u64 × rank)
//!   data     f64 × product(dims)
//! ```

use std::io::{Read, Write};

use super::layers::ParamSet;
use super::tensor::Tensor;
use super::NdError;

const MAGIC: &[u8; 8] = b"EVEXCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_params<W: Write>(params: &ParamSet, mut out: W) -> Result<(), NdError> {
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, t) in params.iter() {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NdError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NdError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_params<R: Read>(mut input: R) -> Result<ParamSet, NdError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NdError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(NdError::Checkpoint(format!("unsupported version {}", version)));
    }
    let count = read_u32(&mut input)?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let len = read_u32(&mut input)? as usize;
        let mut name = vec![0u8; len];
        input.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| NdError::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut input)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut input)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut b = [0u8; 8];
        for _ in 0..n {
            input.read_exact(&mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        let t = Tensor::new(shape, data)?;
        if !t.is_finite() {
            return Err(NdError::Checkpoint(format!("{} holds non-finite values", name)));
        }
        params.push(name, t);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let mut p = ParamSet::new();
        p.push("a.weight", Tensor::new(vec![2, 3], vec![1.0, -2.5, 3.0, 0.0, 1e-300, 7.0]).unwrap());
        p.push("a.bias", Tensor::vector(vec![0.25, -0.5]));
        let mut buf = Vec::new();
        write_params(&p, &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(read_params(&buf[..]).unwrap(), p);

        assert!(read_params(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_params(&bad[..]), Err(NdError::Checkpoint(_))));
    }
}
