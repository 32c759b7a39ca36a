//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! "PCSM"            magic
//! u32 version       = 1
//! u32 k             class count
//! u32 F             pooled width
//! u32 P, u32 H      number of per-point and head layers
//! (u32 in, u32 out) x (P + H)   layer-shape table
//! f64[in*out] weight, f64[out] bias   for every layer, in table order
//! ```

use std::io::Write;
use std::path::Path;

use super::{Dense, ModelParams};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PCSM";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(model: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(model);
    write_atomic(path.as_ref(), |w| w.write_all(&bytes))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub(crate) fn encode(model: &ModelParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    let put = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    put(&mut out, CHECKPOINT_VERSION as usize);
    put(&mut out, model.classes());
    put(&mut out, model.pooled_width());
    put(&mut out, model.point_layers().len());
    put(&mut out, model.head_layers().len());
    for layer in model.point_layers().iter().chain(model.head_layers()) {
        put(&mut out, layer.input_width());
        put(&mut out, layer.output_width());
    }
    for t in model.parameters() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(format!(
                "checkpoint truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::format(format!("{what} is implausibly large")))?;
        let b = self.take(len, what)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format("not a checkpoint: bad magic string"));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::format(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let classes = r.u32("class count")?;
    let pooled = r.u32("pooled width")?;
    let n_point = r.u32("layer count")?;
    let n_head = r.u32("layer count")?;
    if n_point == 0 || n_head == 0 || n_point + n_head > 64 {
        return Err(Error::format(format!(
            "implausible layer counts {n_point} + {n_head}"
        )));
    }
    let mut shapes = Vec::with_capacity(n_point + n_head);
    for _ in 0..n_point + n_head {
        let i = r.u32("layer shape")?;
        let o = r.u32("layer shape")?;
        if i == 0 || o == 0 {
            return Err(Error::format("layer with zero width"));
        }
        shapes.push((i, o));
    }
    if shapes[n_point - 1].1 != pooled {
        return Err(Error::format(format!(
            "header says F = {pooled} but last per-point layer has width {}",
            shapes[n_point - 1].1
        )));
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for &(i, o) in &shapes {
        let w = r.f64s(i * o, "weights")?;
        let b = r.f64s(o, "biases")?;
        layers.push(Dense {
            weight: Tensor::matrix(i, o, w).map_err(|e| Error::format(e.to_string()))?,
            bias: Tensor::vector(b).map_err(|e| Error::format(e.to_string()))?,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::format(format!(
            "{} trailing bytes after checkpoint payload",
            bytes.len() - r.pos
        )));
    }
    let head = layers.split_off(n_point);
    ModelParams::from_layers(classes, layers, head).map_err(|e| match e {
        Error::Structural(m) => Error::format(m),
        other => other,
    })
}
