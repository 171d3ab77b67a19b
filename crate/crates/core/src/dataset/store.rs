//! Window store: `GFWSTORE` magic, a little-endian `u64` manifest length, the
//! JSON manifest, then every tensor as little-endian `f32` in channel-major
//! order, windows back to back.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChannelSpec, DatasetError, FoldTag, WindowSample, WindowSpan};

const MAGIC: &[u8; 8] = b"GFWSTORE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub index: usize,
    pub participant_id: String,
    pub session_id: String,
    pub video_id: String,
    pub probe_index: usize,
    pub label: u8,
    pub video_progress: f64,
    pub modality_mask: Vec<bool>,
    pub span: WindowSpan,
}

/// How the stored tensors were transformed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatsProvenance {
    /// Resampled values, not standardized.
    Raw,
    Standardized { fold: FoldTag },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStoreManifest {
    pub format_version: u32,
    pub channel_spec: ChannelSpec,
    pub channel_spec_hash: String,
    pub n_samples: usize,
    pub stats: StatsProvenance,
    pub windows: Vec<WindowEntry>,
}

pub fn write_window_store(path: &Path, windows: &[WindowSample], spec: &ChannelSpec, stats: StatsProvenance) -> Result<(), DatasetError> {
    let n_samples = windows.first().map(|w| w.n_samples).unwrap_or(0);
    let manifest = WindowStoreManifest {
        format_version: 1,
        channel_spec: spec.clone(),
        channel_spec_hash: spec.hash(),
        n_samples,
        stats,
        windows: windows
            .iter()
            .enumerate()
            .map(|(index, w)| WindowEntry {
                index,
                participant_id: w.participant_id.clone(),
                session_id: w.session_id.clone(),
                video_id: w.video_id.clone(),
                probe_index: w.probe_index,
                label: w.label,
                video_progress: w.video_progress,
                modality_mask: w.modality_mask.clone(),
                span: w.span.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest).map_err(store_err)?;
    let file = File::create(path).map_err(store_err)?;
    let mut out = BufWriter::new(file);
    out.write_all(MAGIC).map_err(store_err)?;
    out.write_all(&(json.len() as u64).to_le_bytes()).map_err(store_err)?;
    out.write_all(&json).map_err(store_err)?;
    let mut buf = Vec::new();
    for w in windows {
        if w.n_samples != n_samples || w.n_channels != spec.n_channels() {
            return Err(DatasetError::Store("windows differ in shape".into()));
        }
        buf.clear();
        buf.extend(w.tensor.iter().flat_map(|v| v.to_le_bytes()));
        out.write_all(&buf).map_err(store_err)?;
    }
    out.flush().map_err(store_err)
}

pub fn read_window_store(path: &Path) -> Result<(WindowStoreManifest, Vec<WindowSample>), DatasetError> {
    let file = File::open(path).map_err(store_err)?;
    let mut input = BufReader::new(file);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(store_err)?;
    if &magic != MAGIC {
        return Err(DatasetError::Store("not a window store".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len).map_err(store_err)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    input.read_exact(&mut json).map_err(store_err)?;
    let manifest: WindowStoreManifest = serde_json::from_slice(&json).map_err(store_err)?;
    if manifest.channel_spec.hash() != manifest.channel_spec_hash {
        return Err(DatasetError::Store("channel spec hash mismatch".into()));
    }
    let n_channels = manifest.channel_spec.n_channels();
    let per_window = n_channels * manifest.n_samples;
    let mut bytes = vec![0u8; per_window * 4];
    let mut windows = Vec::with_capacity(manifest.windows.len());
    for entry in &manifest.windows {
        input.read_exact(&mut bytes).map_err(store_err)?;
        let tensor: Vec<f32> = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        let w = WindowSample {
            participant_id: entry.participant_id.clone(),
            session_id: entry.session_id.clone(),
            video_id: entry.video_id.clone(),
            probe_index: entry.probe_index,
            span: entry.span.clone(),
            n_channels,
            n_samples: manifest.n_samples,
            tensor,
            modality_mask: entry.modality_mask.clone(),
            video_progress: entry.video_progress,
            label: entry.label,
        };
        w.validate(&manifest.channel_spec)?;
        windows.push(w);
    }
    Ok((manifest, windows))
}

fn store_err(e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Store(e.to_string())
}
