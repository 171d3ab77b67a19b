use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stream::{check_coverage, expand_packet_timestamps, parse_stream, sort_by_time, DevicePolicy, SensorStream, TimestampPolicy};
use super::{parse_probe_log, Diagnostic, IngestError, ProbeRecord};

/// One device stream file listed in a session manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceEntry {
    pub device_id: String,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    #[serde(flatten)]
    pub policy: DevicePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub participant_id: String,
    pub session_id: String,
    pub video_id: String,
    pub start_ms: f64,
    pub end_ms: f64,
    pub probe_log: PathBuf,
    pub devices: Vec<DeviceEntry>,
}

impl SessionManifest {
    pub fn timestamp_policy(&self) -> TimestampPolicy {
        let mut policy = TimestampPolicy::default();
        for d in &self.devices {
            policy.insert(d.device_id.clone(), d.policy.clone());
        }
        policy
    }
}

/// Cohort-level index: every session plus the optional quiz score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub sessions: Vec<SessionManifest>,
    #[serde(default)]
    pub quiz: Option<PathBuf>,
}

pub fn load_cohort_manifest(path: &Path) -> Result<CohortManifest, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| IngestError::Manifest { path: path.to_path_buf(), reason: e.to_string() })
}

/// A fully ingested session: sorted, clock-normalized streams keyed by device id.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSession {
    pub participant_id: String,
    pub session_id: String,
    pub video_id: String,
    pub start_ms: f64,
    pub end_ms: f64,
    pub streams: BTreeMap<String, SensorStream>,
    pub probes: Vec<ProbeRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Runs parse → sort → packet expansion → coverage check for every device of a session.
pub fn load_session(manifest: &SessionManifest, base_dir: &Path) -> Result<LoadedSession, IngestError> {
    let policy = manifest.timestamp_policy();
    let mut streams = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for entry in &manifest.devices {
        let stream = parse_stream(&base_dir.join(&entry.path), &entry.device_id, &policy)?;
        let mut stream = sort_by_time(stream);
        if entry.policy.packetized {
            let (expanded, found) = expand_packet_timestamps(stream, entry.policy.rate_hz);
            diagnostics.extend(found);
            // overlapping runs are reported, then the sort invariant is restored
            stream = sort_by_time(expanded);
        }
        diagnostics.extend(check_coverage(&stream, manifest.start_ms, manifest.end_ms));
        streams.insert(entry.device_id.clone(), stream);
    }
    let probes: Vec<ProbeRecord> = parse_probe_log(&base_dir.join(&manifest.probe_log))?
        .into_iter()
        .filter(|p| p.session_id == manifest.session_id)
        .collect();
    Ok(LoadedSession {
        participant_id: manifest.participant_id.clone(),
        session_id: manifest.session_id.clone(),
        video_id: manifest.video_id.clone(),
        start_ms: manifest.start_ms,
        end_ms: manifest.end_ms,
        streams,
        probes,
        diagnostics,
    })
}
