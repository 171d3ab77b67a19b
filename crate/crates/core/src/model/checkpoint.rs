use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Architecture, GatedFusionModel, ModelError};

const MAGIC: &[u8; 8] = b"GFMODEL1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub architecture: Architecture,
    pub seed: u64,
    pub channel_spec_hash: String,
    pub n_params: usize,
}

/// Magic, u64 LE header length, JSON header, then the parameters as
/// little-endian f32.
pub fn write_checkpoint<W: Write>(model: &GatedFusionModel, mut out: W) -> Result<(), ModelError> {
    let header = CheckpointHeader {
        format_version: 1,
        architecture: model.architecture().clone(),
        seed: model.seed(),
        channel_spec_hash: model.architecture().channel_spec_hash.clone(),
        n_params: model.params().len(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    let mut blob = Vec::with_capacity(model.params().len() * 4);
    for &p in model.params() {
        blob.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out.write_all(&blob)?;
    Ok(out.flush()?)
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<(GatedFusionModel, CheckpointHeader), ModelError> {
    let bad = |r: String| ModelError::Checkpoint(r);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a model checkpoint".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json).map_err(|e| bad(e.to_string()))?;
    if header.format_version != 1 {
        return Err(bad(format!("unsupported format version {}", header.format_version)));
    }
    let mut blob = Vec::new();
    input.read_to_end(&mut blob)?;
    if blob.len() != header.n_params * 4 {
        return Err(bad(format!("expected {} parameter bytes, found {}", header.n_params * 4, blob.len())));
    }
    let params = blob.chunks_exact(4).map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))).collect();
    let model = GatedFusionModel::from_params(header.architecture.clone(), params, header.seed)?;
    Ok((model, header))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub window_id: usize,
    pub modality: String,
    pub gamma: f64,
}

/// CSV `window_id,modality,gamma`.
pub fn write_gate_log<W: Write>(records: &[GateRecord], out: W) -> Result<(), ModelError> {
    let mut csv = csv::Writer::from_writer(out);
    for r in records {
        csv.serialize(r).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    }
    Ok(csv.flush()?)
}
