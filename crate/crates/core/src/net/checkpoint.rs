//! Checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! magic     8 bytes  "CBLMODEL"
//! version   u32      1
//! hdr_len   u64      length of the JSON header in bytes
//! header    JSON     {"config": ModelConfig, "tensors": [{"name", "shape"}, ...]}
//! params    f64 × N  every tensor in header order, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig};
use crate::error::{Error, Result};
use crate::fsio;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CBLMODEL";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    tensors: Vec<TensorHeader>,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

fn tensor_headers(model: &Model) -> Vec<TensorHeader> {
    model
        .layout()
        .tensors()
        .iter()
        .map(|t| TensorHeader {
            name: t.name.clone(),
            shape: t.shape.clone(),
        })
        .collect()
}

pub fn write_checkpoint<W: Write>(model: &Model, mut w: W) -> std::io::Result<()> {
    let header = serde_json::to_vec(&Header {
        config: model.config().clone(),
        tensors: tensor_headers(model),
    })?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Model> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a model checkpoint"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(|_| bad("truncated version"))?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8).map_err(|_| bad("truncated header length"))?;
    let len = u64::from_le_bytes(b8) as usize;
    if len > 1 << 24 {
        return Err(bad("header too large"));
    }
    let mut header = vec![0u8; len];
    r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&header)?;
    header.config.validate()?;
    let template = Model::from_parts(header.config.clone(), vec![0.0; super::Layout::new(&header.config).total()])?;
    if header.tensors != tensor_headers(&template) {
        return Err(bad("tensor table does not match the configured architecture"));
    }
    let mut params = Vec::with_capacity(template.n_params());
    for _ in 0..template.n_params() {
        r.read_exact(&mut b8).map_err(|_| bad("truncated parameters"))?;
        params.push(f64::from_le_bytes(b8));
    }
    if r.read(&mut [0u8; 1]).map_err(|e| Error::Checkpoint(e.to_string()))? != 0 {
        return Err(bad("trailing bytes after parameters"));
    }
    Model::from_parts(header.config, params)
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(model.n_params() * 8 + 4096);
    write_checkpoint(model, &mut buf).map_err(|e| Error::io(path, e))?;
    fsio::write_atomic(path, &buf)
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(bytes.as_slice())
}
