//! Binary parameter format, also used as the federation payload.
//!
//! ```text
//! magic   4 bytes  "SGPS"
//! version u16 LE
//! layout  u64 LE   layout id of the shapes below
//! count   u32 LE   number of tensors
//! per tensor: rank u32 LE, then rank x u32 LE dims
//! values  f32 LE, tensors concatenated in order
//! ```

use super::params::{layout_id, ParamSet};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SGPS";
pub const VERSION: u16 = 1;

pub fn serialize(params: &ParamSet) -> Vec<u8> {
    let header: usize = 18 + params.shapes().iter().map(|s| 4 + 4 * s.len()).sum::<usize>();
    let mut out = Vec::with_capacity(header + 4 * params.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&params.layout_id().to_le_bytes());
    out.extend_from_slice(&(params.num_tensors() as u32).to_le_bytes());
    for shape in params.shapes() {
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &d in shape {
            out.extend_from_slice(&d.to_le_bytes());
        }
    }
    for v in params.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Decode(format!("truncated: need {n} bytes at offset {}, have {}", self.pos, self.buf.len())))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<ParamSet> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Decode("bad magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Decode(format!("unsupported version {version}")));
    }
    let declared = r.u64()?;
    let count = r.u32()? as usize;
    // every tensor needs at least its rank word
    if count > bytes.len() / 4 {
        return Err(Error::Decode(format!("implausible tensor count {count}")));
    }
    let mut shapes = Vec::with_capacity(count);
    let mut total: usize = 0;
    for _ in 0..count {
        let rank = r.u32()? as usize;
        if rank > bytes.len() / 4 {
            return Err(Error::Decode(format!("implausible rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut n: usize = 1;
        for _ in 0..rank {
            let d = r.u32()?;
            n = n
                .checked_mul(d as usize)
                .ok_or_else(|| Error::Decode("tensor size overflow".into()))?;
            shape.push(d);
        }
        total = total.checked_add(n).ok_or_else(|| Error::Decode("tensor size overflow".into()))?;
        shapes.push(shape);
    }
    let computed = layout_id(&shapes);
    if computed != declared {
        return Err(Error::LayoutMismatch {
            expected: computed,
            got: declared,
        });
    }
    let raw = r.take(total.checked_mul(4).ok_or_else(|| Error::Decode("tensor size overflow".into()))?)?;
    if r.pos != bytes.len() {
        return Err(Error::Decode(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    ParamSet::from_parts(shapes, data)
}

/// Decodes and additionally requires a specific layout.
pub fn deserialize_expecting(bytes: &[u8], expected_layout: u64) -> Result<ParamSet> {
    let p = deserialize(bytes)?;
    if p.layout_id() != expected_layout {
        return Err(Error::LayoutMismatch {
            expected: expected_layout,
            got: p.layout_id(),
        });
    }
    Ok(p)
}
