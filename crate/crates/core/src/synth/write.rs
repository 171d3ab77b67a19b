use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{device_policy, generate_session, latent_traces, plan_cohort, quiz_scores, LatentTrace, SynthConfig, SynthError};
use crate::dataset::ChannelSpec;
use crate::ingest::{CohortManifest, DeviceEntry, ProbeRecord, SensorStream, SessionManifest};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "synth_config.json";
pub const QUIZ_FILE: &str = "quiz.csv";
pub const SIDECAR_FILE: &str = "ground_truth.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub sessions: usize,
    pub probes: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityCoupling {
    pub modality: String,
    pub kappa: f64,
}

/// Ground truth of a generated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantReport {
    pub seed: u64,
    /// Couplings exactly as configured.
    pub coupling: BTreeMap<String, f64>,
    /// Coupling of every modality in channel-spec order.
    pub modality_coupling: Vec<ModalityCoupling>,
    pub label_proportions: [f64; 5],
    pub video_length_s: f64,
    pub trace_rate_hz: f64,
    pub traces: Vec<LatentTrace>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, SynthError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SynthError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| SynthError::Format { path: path.to_path_buf(), reason: e.to_string() })?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io(path))
}

fn write_stream(path: &Path, stream: &SensorStream) -> Result<(), SynthError> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        write!(out, "timestamp_ms")?;
        for c in &stream.channels {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for (i, t) in stream.timestamps_ms.iter().enumerate() {
            write!(out, "{t}")?;
            for column in &stream.values {
                match column[i] {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        out.flush()
    };
    write().map_err(io(path))
}

fn write_probes(path: &Path, probes: &[ProbeRecord]) -> Result<(), SynthError> {
    let mut csv = csv::Writer::from_writer(create(path)?);
    let fmt = |e: csv::Error| SynthError::Format { path: path.to_path_buf(), reason: e.to_string() };
    csv.write_record(["participant_id", "session_id", "video_id", "video_time_s", "wall_clock_ms", "response"]).map_err(fmt)?;
    for p in probes {
        csv.write_record([
            p.participant_id.clone(),
            p.session_id.clone(),
            p.video_id.clone(),
            p.video_time_s.to_string(),
            p.wall_clock_ms.to_string(),
            p.response.token(),
        ])
        .map_err(fmt)?;
    }
    csv.flush().map_err(io(path))
}

/// Writes the cohort in the ingest formats:
///
/// ```text
/// <dir>/manifest.json
/// <dir>/sessions/<session_id>/<device_id>.csv
/// <dir>/sessions/<session_id>/probes.csv
/// <dir>/quiz.csv
/// <dir>/synth_config.json
/// <dir>/ground_truth.json
/// ```
pub fn generate_cohort(config: &SynthConfig, spec: &ChannelSpec, dir: &Path) -> Result<CohortSummary, SynthError> {
    let plan = plan_cohort(config, spec)?;
    let sessions: Vec<Result<(SessionManifest, usize, usize), SynthError>> = (0..plan.sessions.len())
        .into_par_iter()
        .map(|i| {
            let session = generate_session(config, spec, &plan, i);
            let rel = PathBuf::from("sessions").join(&session.session_id);
            let mut devices = Vec::new();
            for (device_id, stream) in &session.streams {
                let path = rel.join(format!("{device_id}.csv"));
                write_stream(&dir.join(&path), stream)?;
                devices.push(DeviceEntry { device_id: device_id.clone(), path, policy: device_policy(device_id, stream.native_rate_hz) });
            }
            let probe_log = rel.join("probes.csv");
            write_probes(&dir.join(&probe_log), &session.probes)?;
            let excluded = session.probes.iter().filter(|p| p.response.level().is_none()).count();
            let manifest = SessionManifest {
                participant_id: session.participant_id,
                session_id: session.session_id,
                video_id: session.video_id,
                start_ms: session.start_ms,
                end_ms: session.end_ms,
                probe_log,
                devices,
            };
            Ok((manifest, session.probes.len(), excluded))
        })
        .collect();

    let mut summary = CohortSummary { sessions: 0, probes: 0, excluded: 0 };
    let mut manifests = Vec::with_capacity(sessions.len());
    for s in sessions {
        let (m, probes, excluded) = s?;
        summary.sessions += 1;
        summary.probes += probes;
        summary.excluded += excluded;
        manifests.push(m);
    }
    write_json(&dir.join(MANIFEST_FILE), &CohortManifest { sessions: manifests, quiz: Some(PathBuf::from(QUIZ_FILE)) })?;

    let quiz_path = dir.join(QUIZ_FILE);
    let mut csv = csv::Writer::from_writer(create(&quiz_path)?);
    for q in quiz_scores(config, &plan) {
        csv.serialize(q).map_err(|e| SynthError::Format { path: quiz_path.clone(), reason: e.to_string() })?;
    }
    csv.flush().map_err(io(&quiz_path))?;

    write_json(&dir.join(CONFIG_FILE), config)?;
    plant_report(dir, spec)?;
    Ok(summary)
}

/// Rebuilds the latent traces of the cohort in `dir` from its stored config
/// and writes them, with the coupling table, to `ground_truth.json`.
pub fn plant_report(dir: &Path, spec: &ChannelSpec) -> Result<PlantReport, SynthError> {
    let config_path = dir.join(CONFIG_FILE);
    if !config_path.is_file() {
        return Err(SynthError::MissingCohort(dir.to_path_buf()));
    }
    let text = std::fs::read_to_string(&config_path).map_err(io(&config_path))?;
    let config: SynthConfig =
        serde_json::from_str(&text).map_err(|e| SynthError::Format { path: config_path.clone(), reason: e.to_string() })?;
    let plan = plan_cohort(&config, spec)?;
    let report = PlantReport {
        seed: config.seed,
        coupling: config.coupling.clone(),
        modality_coupling: spec
            .modalities
            .iter()
            .map(|m| ModalityCoupling { modality: m.key.clone(), kappa: config.kappa(&m.key) })
            .collect(),
        label_proportions: config.label_proportions,
        video_length_s: config.video_length_s,
        trace_rate_hz: config.trace_rate_hz,
        traces: latent_traces(&config, &plan),
    };
    write_json(&dir.join(SIDECAR_FILE), &report)?;
    Ok(report)
}

pub fn read_plant_report(dir: &Path) -> Result<PlantReport, SynthError> {
    let path = dir.join(SIDECAR_FILE);
    if !path.is_file() {
        return Err(SynthError::MissingCohort(dir.to_path_buf()));
    }
    let text = std::fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map_err(|e| SynthError::Format { path, reason: e.to_string() })
}
