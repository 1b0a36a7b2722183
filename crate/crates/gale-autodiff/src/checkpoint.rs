use crate::params::ParamStore;
use crate::tensor::Tensor;
use crate::{AutodiffError, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Index of a saved parameter set: `manifest.json` describes the layout and
/// `weights.bin` holds the values as little-endian `f64` in manifest order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub seed: u64,
    pub params: Vec<ParamEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Element (not byte) offset into `weights.bin`.
    pub offset: usize,
    pub step: u64,
}

/// Write `manifest.json` and `weights.bin` into `dir`, creating it if needed.
/// Only values are persisted; optimizer moments are not.
pub fn save_checkpoint(store: &ParamStore, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut params = Vec::with_capacity(store.len());
    let mut blob: Vec<u8> = Vec::new();
    let mut offset = 0;
    for (_, p) in store.iter() {
        params.push(ParamEntry {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            offset,
            step: p.step(),
        });
        for v in p.value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        offset += p.value.len();
    }
    let manifest = CheckpointManifest {
        seed: store.seed(),
        params,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| AutodiffError::Format(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)?;
    fs::write(dir.join("weights.bin"), blob)?;
    Ok(())
}

/// Read a checkpoint back into an existing store whose parameters were
/// registered with the same names and shapes (the usual flow is to rebuild
/// the model from its config, then overwrite the fresh weights).
pub fn load_checkpoint(dir: &Path, store: &mut ParamStore) -> Result<CheckpointManifest> {
    let json = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: CheckpointManifest =
        serde_json::from_str(&json).map_err(|e| AutodiffError::Format(e.to_string()))?;
    let blob = fs::read(dir.join("weights.bin"))?;
    let total: usize = manifest.params.iter().map(|p| p.shape.iter().product::<usize>()).sum();
    if blob.len() != total * 8 {
        return Err(AutodiffError::Format(format!(
            "weights.bin holds {} bytes, manifest describes {}",
            blob.len(),
            total * 8
        )));
    }
    for entry in &manifest.params {
        let id = store
            .find(&entry.name)
            .ok_or_else(|| AutodiffError::UnknownParameter(entry.name.clone()))?;
        if store.value(id).shape() != entry.shape.as_slice() {
            return Err(AutodiffError::Format(format!(
                "parameter {} has shape {:?} in the store but {:?} on disk",
                entry.name,
                store.value(id).shape(),
                entry.shape
            )));
        }
        let len: usize = entry.shape.iter().product();
        let start = entry.offset * 8;
        let data: Vec<f64> = blob[start..start + len * 8]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        store.set_value(id, Tensor::new(entry.shape.clone(), data)?);
    }
    Ok(manifest)
}
