//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "MCKP" | u32 version | u64 manifest_len | manifest (UTF-8 JSON)
//! u32 tensor_count
//! per tensor: u32 name_len | name | u32 rank | u64 dims[rank]
//! per tensor, same order: f64 values (row-major)
//! ```

use std::io::{Read, Write};

use super::Parameters;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub manifest: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

impl Checkpoint {
    pub fn from_parameters<P: Parameters>(manifest: serde_json::Value, params: &P) -> Self {
        let mut tensors = Vec::new();
        params.visit("", &mut |name, shape, values| {
            tensors.push(TensorEntry {
                name: name.to_string(),
                shape: shape.to_vec(),
                values: values.to_vec(),
            })
        });
        Self { manifest, tensors }
    }

    /// Copy stored tensors into `params`, which must have exactly the same
    /// names and sizes in the same order.
    pub fn load_into<P: Parameters>(&self, params: &mut P) -> Result<()> {
        let mut idx = 0;
        let mut problem: Option<String> = None;
        params.visit_mut("", &mut |name, values| {
            if problem.is_some() {
                return;
            }
            match self.tensors.get(idx) {
                Some(t) if t.name == name && t.values.len() == values.len() => values.copy_from_slice(&t.values),
                Some(t) => problem = Some(format!("tensor {idx}: expected {name}, found {}", t.name)),
                None => problem = Some(format!("checkpoint is missing tensor {name}")),
            }
            idx += 1;
        });
        if let Some(p) = problem {
            return Err(Error::Serialization(p));
        }
        if idx != self.tensors.len() {
            return Err(Error::Serialization(format!(
                "checkpoint holds {} tensors, model has {idx}",
                self.tensors.len()
            )));
        }
        Ok(())
    }
}

pub fn write_checkpoint<W: Write>(mut out: W, ckpt: &Checkpoint) -> Result<()> {
    let io = |e: std::io::Error| Error::Serialization(e.to_string());
    let manifest = serde_json::to_vec(&ckpt.manifest)?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    buf.extend_from_slice(&manifest);
    buf.extend_from_slice(&(ckpt.tensors.len() as u32).to_le_bytes());
    for t in &ckpt.tensors {
        if t.shape.iter().product::<usize>() != t.values.len() {
            return Err(Error::Serialization(format!(
                "tensor {} shape does not match its data",
                t.name
            )));
        }
        buf.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(t.name.as_bytes());
        buf.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }
    for t in &ckpt.tensors {
        for v in &t.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf).map_err(io)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Serialization("checkpoint is truncated".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Serialization("size does not fit in memory".into()))
    }
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint> {
    let mut data = Vec::new();
    input
        .read_to_end(&mut data)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    let mut c = Cursor { data: &data, pos: 0 };
    if c.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Serialization("not a checkpoint file (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mlen = c.usize()?;
    let manifest: serde_json::Value = serde_json::from_slice(c.take(mlen)?)?;
    let count = c.u32()? as usize;
    let mut headers = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let nlen = c.u32()? as usize;
        let name = String::from_utf8(c.take(nlen)?.to_vec())
            .map_err(|_| Error::Serialization("tensor name is not UTF-8".into()))?;
        let rank = c.u32()? as usize;
        let shape = (0..rank).map(|_| c.usize()).collect::<Result<Vec<_>>>()?;
        headers.push((name, shape));
    }
    let mut tensors = Vec::with_capacity(headers.len());
    for (name, shape) in headers {
        let n: usize = shape.iter().product();
        let raw = c.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Serialization("tensor too large".into()))?,
        )?;
        let values = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        tensors.push(TensorEntry { name, shape, values });
    }
    if c.pos != data.len() {
        return Err(Error::Serialization("trailing bytes after checkpoint".into()));
    }
    Ok(Checkpoint { manifest, tensors })
}
