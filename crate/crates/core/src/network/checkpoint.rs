//! Binary checkpoint format.
//!
//! ```text
//! "WCNN"                      4 bytes magic
//! version                     u16 LE (currently 1)
//! record*                     until the trailing checksum
//!   name_len                  u32 LE
//!   name                      UTF-8, name_len bytes
//!   dtype                     u8 (1 = f32, 2 = f64)
//!   rank                      u8
//!   dims                      rank × u32 LE
//!   values                    product(dims) × dtype, LE
//! crc32                       u32 LE, IEEE CRC-32 of every preceding byte
//! ```
//!
//! Trainable flags are not stored; they are re-derived from the topology
//! when a checkpoint is attached to a network.

use std::fs;
use std::path::Path;

use super::model::Network;
use super::params::ParamStore;
use super::topology::Topology;
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub const MAGIC: &[u8; 4] = b"WCNN";
pub const VERSION: u16 = 1;

pub fn encode<T: Scalar>(store: &ParamStore<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for p in store.iter() {
        let name = p.name.as_bytes();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        out.push(T::DTYPE);
        out.push(p.tensor.rank() as u8);
        for &d in p.tensor.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in p.tensor.data() {
            v.write_le(&mut out);
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("truncated record".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

fn read_values<T: Scalar, S: Scalar>(raw: &[u8]) -> Vec<T> {
    raw.chunks_exact(S::BYTES).map(|c| T::of(S::read_le(c).as_f64())).collect()
}

/// Decodes a checkpoint into a store of `T`. Records saved in the other
/// precision are converted. Every tensor is flagged trainable; use
/// [`Network::from_parts`] to restore the topology's flags.
pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<ParamStore<T>> {
    if bytes.len() < MAGIC.len() + 2 + 4 {
        return Err(Error::Checkpoint("file too short".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let actual = crc32fast::hash(payload);
    if stored != actual {
        return Err(Error::Checkpoint(format!("CRC mismatch: stored {stored:08x}, computed {actual:08x}")));
    }
    let version = u16::from_le_bytes([payload[4], payload[5]]);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut r = Reader { buf: payload, pos: 6 };
    let mut store = ParamStore::new();
    while r.pos < payload.len() {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Checkpoint("record name is not UTF-8".into()))?
            .to_owned();
        let dtype = r.u8()?;
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let count: usize = shape.iter().product();
        let data = match dtype {
            1 => read_values::<T, f32>(r.take(count * 4)?),
            2 => read_values::<T, f64>(r.take(count * 8)?),
            other => return Err(Error::Checkpoint(format!("unknown dtype code {other} for `{name}`"))),
        };
        store.insert(name, Tensor::new(shape, data)?, true, false)?;
    }
    Ok(store)
}

impl<T: Scalar> Network<T> {
    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, encode(&self.params)).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(topology: Topology, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Network::from_parts(topology, decode(&bytes)?)
    }
}
