//! Raw stream and probe-log ingest.
//!
//! Every device writes one CSV per session (`timestamp_ms[,device_time_ms],ch1,...`).
//! Ingest selects the canonical clock column per device, converts units to
//! epoch milliseconds, sorts samples by time, reconstructs per-sample times for
//! packetized streams, and checks that each stream covers its session.
//! Unparseable value cells are carried as `None`; zero substitution only
//! happens later, at resampling.

mod manifest;
mod probe;
mod stream;

pub use manifest::{load_cohort_manifest, load_session, CohortManifest, DeviceEntry, LoadedSession, SessionManifest};
pub use probe::{parse_probe_log, read_probe_log, ProbeRecord, ProbeResponse};
pub use stream::{
    check_coverage, expand_packet_timestamps, parse_stream, read_stream, sort_by_time, DevicePolicy, QualityFilter,
    SensorStream, TimeUnit, TimestampColumn, TimestampPolicy, TimestampSource,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file (line {line}): {reason}")]
    MalformedFile { line: usize, reason: String },
    #[error("no timestamp policy entry for device `{0}`")]
    UnknownDevice(String),
    #[error("invalid probe response `{token}` on line {line}")]
    InvalidResponse { line: usize, token: String },
    #[error("invalid manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
}

/// Non-fatal findings produced while ingesting a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// A reconstructed packet run runs past the next packet's timestamp by more
    /// than one sample period.
    RateMismatch { device_id: String, sample_index: usize, overlap_ms: f64 },
    /// The stream does not span the session interval declared in the manifest.
    CoverageGap {
        device_id: String,
        stream_start_ms: f64,
        stream_end_ms: f64,
        session_start_ms: f64,
        session_end_ms: f64,
    },
}
