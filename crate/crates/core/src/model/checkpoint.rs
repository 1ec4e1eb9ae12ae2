//! Checkpoints: a JSON manifest next to a blob of little-endian f32 values.
//!
//! ```text
//! <dir>/manifest.json   hyperparameters, classes, seeds, tensor table
//! <dir>/params.bin      row-major tensors, concatenated in table order
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HyperParams, ModelParams};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "params.bin";
const FORMAT: &str = "texting-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the blob.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    hyper: HyperParams,
    classes: Vec<String>,
    oov_seed: u64,
    epoch: Option<usize>,
    tensors: Vec<TensorEntry>,
}

/// Everything needed to rebuild a trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hyper: HyperParams,
    pub classes: Vec<String>,
    pub oov_seed: u64,
    pub epoch: Option<usize>,
    pub params: ModelParams<f32>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

pub fn save_checkpoint(dir: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut blob = Vec::with_capacity(ckpt.params.num_elements() * 4);
    let mut tensors = Vec::new();
    for (name, t) in ckpt.params.tensors() {
        tensors.push(TensorEntry {
            name,
            shape: t.shape().to_vec(),
            offset: blob.len(),
        });
        for v in t.iter() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        hyper: ckpt.hyper.clone(),
        classes: ckpt.classes.clone(),
        oov_seed: ckpt.oov_seed,
        epoch: ckpt.epoch,
        tensors,
    };
    let blob_path = dir.join(BLOB_FILE);
    std::fs::write(&blob_path, &blob).map_err(io_err(&blob_path))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format {} v{}",
            manifest.format, manifest.version
        )));
    }
    let blob_path = dir.join(BLOB_FILE);
    let blob = std::fs::read(&blob_path).map_err(io_err(&blob_path))?;

    let mut params: ModelParams<f32> = ModelParams::init(&manifest.hyper, manifest.classes.len());
    let mut slots = params.tensors_mut();
    if slots.len() != manifest.tensors.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, manifest lists {}",
            slots.len(),
            manifest.tensors.len()
        )));
    }
    for ((name, slot), entry) in slots.iter_mut().zip(&manifest.tensors) {
        if *name != entry.name || slot.shape() != entry.shape.as_slice() {
            return Err(Error::Checkpoint(format!(
                "tensor {} {:?} does not match expected {} {:?}",
                entry.name,
                entry.shape,
                name,
                slot.shape()
            )));
        }
        let end = entry.offset + slot.len() * 4;
        let bytes = blob
            .get(entry.offset..end)
            .ok_or_else(|| Error::Checkpoint(format!("blob too short for {}", entry.name)))?;
        for (v, chunk) in slot.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    drop(slots);
    Ok(Checkpoint {
        hyper: manifest.hyper,
        classes: manifest.classes,
        oov_seed: manifest.oov_seed,
        epoch: manifest.epoch,
        params,
    })
}
