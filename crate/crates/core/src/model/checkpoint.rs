//! Checkpoint format: a self-describing header (config, vocab hash, tensor
//! table) followed by the named tensors as little-endian f32 values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::params::{ModelParameters, ParamLayout};
use super::ModelConfig;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CGCK";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab_hash: u64,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

/// A checkpoint read back from disk.
#[derive(Debug)]
pub struct StoredCheckpoint {
    pub config: ModelConfig,
    pub vocab_hash: u64,
    pub params: ModelParameters,
}

pub fn save_checkpoint(
    params: &ModelParameters,
    config: &ModelConfig,
    vocab_hash: u64,
    path: &Path,
) -> Result<()> {
    let header = Header {
        config: config.clone(),
        vocab_hash,
        tensors: params
            .layout()
            .specs()
            .iter()
            .map(|s| TensorEntry {
                name: s.name.clone(),
                shape: s.shape.clone(),
            })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    let mut buf = Vec::with_capacity(params.data().len() * 4);
    for &v in params.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

/// Loads a checkpoint, validating the stored tensor table against the
/// layout its config implies.
pub fn load_checkpoint(path: &Path) -> Result<StoredCheckpoint> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::data(format!(
            "{} is not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let mut word = [0u8; 4];
    reader.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::data(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    reader.read_exact(&mut word)?;
    let header_len = u32::from_le_bytes(word) as usize;
    let mut header_bytes = vec![0u8; header_len];
    reader.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)?;
    header.config.validate()?;

    let layout = Arc::new(ParamLayout::for_config(&header.config));
    // The stored tensor table must match the config-derived layout exactly;
    // the first disagreement is reported by name.
    if header.tensors.len() != layout.specs().len() {
        return Err(Error::Shape(format!(
            "checkpoint lists {} tensors, config implies {}",
            header.tensors.len(),
            layout.specs().len()
        )));
    }
    for (stored, expected) in header.tensors.iter().zip(layout.specs()) {
        if stored.name != expected.name || stored.shape != expected.shape {
            return Err(Error::Shape(format!(
                "tensor {} has shape {:?}, expected {} with shape {:?}",
                stored.name, stored.shape, expected.name, expected.shape
            )));
        }
    }

    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    if raw.len() != layout.total_len() * 4 {
        return Err(Error::Shape(format!(
            "checkpoint payload is {} bytes, layout needs {}",
            raw.len(),
            layout.total_len() * 4
        )));
    }
    let data: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let params = ModelParameters::from_raw(layout, data)?;
    Ok(StoredCheckpoint {
        config: header.config,
        vocab_hash: header.vocab_hash,
        params,
    })
}

/// Loads a checkpoint that must be compatible with `expected`; the error
/// names the first mismatched shape.
pub fn load_checkpoint_expecting(
    path: &Path,
    expected: &ModelConfig,
) -> Result<StoredCheckpoint> {
    let stored = load_checkpoint(path)?;
    let expected_layout = ParamLayout::for_config(expected);
    let stored_layout = stored.params.layout();
    for (s, e) in stored_layout.specs().iter().zip(expected_layout.specs()) {
        if s.name != e.name || s.shape != e.shape {
            return Err(Error::Shape(format!(
                "tensor {}: checkpoint shape {:?}, expected {:?}",
                e.name, s.shape, e.shape
            )));
        }
    }
    if stored_layout.specs().len() != expected_layout.specs().len() {
        return Err(Error::Shape(format!(
            "checkpoint has {} tensors, config expects {}",
            stored_layout.specs().len(),
            expected_layout.specs().len()
        )));
    }
    Ok(stored)
}
