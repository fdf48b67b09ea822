//! Dense f32 tensors, ordered name→tensor maps, and the NNWF weights file.
//!
//! NNWF layout (little-endian, no padding):
//!
//! ```text
//! magic  "NNW1"
//! u32    tensor count
//! per tensor:
//!   u16  name length, name bytes (ASCII)
//!   u8   rank, rank x u32 extents
//!   f32  x product(extents), row-major
//! ```

use crate::error::{Error, Result};

pub const NNWF_MAGIC: &[u8; 3] = b"NNW";
pub const NNWF_VERSION: u8 = b'1';

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub fn from_fn(shape: Vec<usize>, f: impl FnMut(usize) -> f32) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: (0..n).map(f).collect() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::shape(format!("cannot reshape {:?} to {shape:?}", self.shape)));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn expect_shape(&self, what: &str, shape: &[usize]) -> Result<()> {
        if self.shape != shape {
            return Err(Error::shape(format!("{what}: expected shape {shape:?}, got {:?}", self.shape)));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Option<f32> {
        if self.shape != other.shape {
            return None;
        }
        Some(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max))
    }
}

/// Insertion-ordered tensor collection with unique ASCII names.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorMap {
    entries: Vec<(String, Tensor)>,
}

impl TensorMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if name.is_empty() || !name.is_ascii() || name.len() > u16::MAX as usize {
            return Err(Error::arg(format!("invalid tensor name {name:?}")));
        }
        if self.get(&name).is_some() {
            return Err(Error::arg(format!("duplicate tensor name {name:?}")));
        }
        self.entries.push((name, tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name).ok_or_else(|| Error::shape(format!("missing tensor {name:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends every entry of `other`, failing on name clashes.
    pub fn extend(&mut self, other: TensorMap) -> Result<()> {
        for (n, t) in other.entries {
            self.insert(n, t)?;
        }
        Ok(())
    }
}

pub fn save_weights(map: &TensorMap) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(NNWF_MAGIC);
    out.push(NNWF_VERSION);
    out.extend_from_slice(&(map.len() as u32).to_le_bytes());
    for (name, t) in map.iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.shape().len() as u8);
        for &e in t.shape() {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Weights { offset: self.pos, msg: format!("truncated while reading {what}") });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn load_weights(bytes: &[u8]) -> Result<TensorMap> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if &magic[..3] != NNWF_MAGIC {
        return Err(Error::Weights { offset: 0, msg: "bad magic".into() });
    }
    if magic[3] != NNWF_VERSION {
        return Err(Error::Weights { offset: 3, msg: format!("unsupported version {:?}", magic[3] as char) });
    }
    let count = r.u32("tensor count")?;
    let mut map = TensorMap::new();
    for _ in 0..count {
        let at = r.pos;
        let len = r.u16("name length")? as usize;
        let raw = r.take(len, "name")?;
        let name = std::str::from_utf8(raw)
            .ok()
            .filter(|n| n.is_ascii() && !n.is_empty())
            .ok_or_else(|| Error::Weights { offset: at + 2, msg: "tensor name must be non-empty ASCII".into() })?
            .to_string();
        let rank = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("extent")? as usize);
        }
        let n = shape.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e)).ok_or_else(|| Error::Weights {
            offset: r.pos,
            msg: format!("tensor {name:?} extents overflow"),
        })?;
        let data_at = r.pos;
        let raw = r.take(n.saturating_mul(4), &format!("data of tensor {name:?}"))?;
        let data: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Weights { offset: data_at + 4 * i, msg: format!("non-finite value in tensor {name:?}") });
        }
        map.insert(name, Tensor { shape, data }).map_err(|e| Error::Weights { offset: at, msg: e.to_string() })?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Weights { offset: r.pos, msg: "trailing bytes after last tensor".into() });
    }
    Ok(map)
}
