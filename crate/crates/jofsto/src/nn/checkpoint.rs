//! Versioned binary network checkpoints.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic "JFNN" | version u32 | layer_count u32
//! hidden_activation u8 | output_activation u8 | checksum u64
//! dims (layer_count + 1) x u32
//! per layer: weights f32 row-major (out x in), then biases f32 (out)
//! ```
//!
//! The checksum is FNV-1a over every byte after the checksum field; loading
//! a tampered file fails with a checksum error. Round-trips are bit-exact.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{Activation, DenseNet, Layer};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"JFNN";
const VERSION: u32 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn save_checkpoint(net: &DenseNet<f32>, path: &Path) -> Result<()> {
    let mut payload = Vec::new();
    for &d in net.layer_dims() {
        payload.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for layer in net.layers() {
        for &w in layer.weights.data() {
            payload.extend_from_slice(&w.to_le_bytes());
        }
        for &b in &layer.biases {
            payload.extend_from_slice(&b.to_le_bytes());
        }
    }

    let mut bytes = Vec::with_capacity(payload.len() + 22);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    bytes.push(net.hidden_activation().tag());
    bytes.push(net.output_activation().tag());
    bytes.extend_from_slice(&fnv1a(&payload).to_le_bytes());
    bytes.extend_from_slice(&payload);
    fs::write(path, bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: String,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(Error::Format {
                path: self.path.clone(),
                offset: self.offset as u64,
                detail: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn err(&self, detail: impl ToString) -> Error {
        Error::Format {
            path: self.path.clone(),
            offset: self.offset as u64,
            detail: detail.to_string(),
        }
    }
}

pub fn load_checkpoint(path: &Path) -> Result<DenseNet<f32>> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, offset: 0, path: path.display().to_string() };

    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Format {
            path: r.path.clone(),
            offset: 0,
            detail: "bad magic, expected JFNN".into(),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.err(format!("unsupported version {version}")));
    }
    let layer_count = r.u32("layer count")? as usize;
    if layer_count == 0 {
        return Err(r.err("zero layers"));
    }
    let hidden_tag = r.take(1, "hidden activation")?[0];
    let output_tag = r.take(1, "output activation")?[0];
    let hidden = Activation::from_tag(hidden_tag)
        .ok_or_else(|| r.err(format!("unknown hidden activation tag {hidden_tag}")))?;
    if hidden != Activation::Relu {
        return Err(r.err("hidden activation must be relu"));
    }
    let output = Activation::from_tag(output_tag)
        .ok_or_else(|| r.err(format!("unknown output activation tag {output_tag}")))?;
    let stored_checksum = r.u64("checksum")?;
    let payload_start = r.offset;

    let mut dims = Vec::with_capacity(layer_count + 1);
    for i in 0..=layer_count {
        let d = r.u32(&format!("dim {i}"))? as usize;
        if d == 0 {
            return Err(r.err(format!("zero width at dim {i}")));
        }
        dims.push(d);
    }

    let block_floats: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let expected_len = r.offset + block_floats * 4;
    if bytes.len() != expected_len {
        return Err(Error::Format {
            path: r.path.clone(),
            offset: bytes.len().min(expected_len) as u64,
            detail: format!("expected {expected_len} bytes, file has {}", bytes.len()),
        });
    }

    let computed = fnv1a(&bytes[payload_start..]);
    if computed != stored_checksum {
        return Err(Error::Checksum {
            path: r.path.clone(),
            stored: stored_checksum,
            computed,
        });
    }

    let mut layers = Vec::with_capacity(layer_count);
    for li in 0..layer_count {
        let (in_dim, out_dim) = (dims[li], dims[li + 1]);
        let mut weights = Matrix::zeros(out_dim, in_dim);
        for v in weights.data_mut() {
            *v = r.f32("weights")?;
        }
        let mut biases = vec![0.0f32; out_dim];
        for b in biases.iter_mut() {
            *b = r.f32("biases")?;
        }
        layers.push(Layer { weights, biases });
    }
    if r.offset != bytes.len() {
        return Err(r.err(format!("{} trailing bytes", bytes.len() - r.offset)));
    }

    DenseNet::from_layers(layers, output)
}
