//! Seeded synthetic cohort with a planted engagement signal.
//!
//! Each session follows a latent attention-difficulty trajectory `e(t)` on
//! the 1–5 scale. Probe labels are noisy roundings of `e` at the probe time,
//! and every modality's carrier shifts its mean and spread with `e` in
//! proportion to that modality's coupling `κ`. With every `κ = 0` the
//! sensors carry no information about the labels.
//!
//! The cohort can be written to disk in the ingest formats
//! ([`generate_cohort`]) or generated straight into memory
//! ([`generate_session`], [`synth_windows`]); both paths produce identical
//! sessions.

mod latent;
mod signal;
mod write;

pub use latent::LatentTrace;
pub use write::{
    generate_cohort, plant_report, read_plant_report, CohortSummary, ModalityCoupling, PlantReport, CONFIG_FILE, MANIFEST_FILE, QUIZ_FILE,
    SIDECAR_FILE,
};

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{assemble_windows, ChannelSpec, DatasetError, WindowConfig, WindowSample};
use crate::evaluation::QuizRecord;
use crate::ingest::{DevicePolicy, LoadedSession, ProbeRecord, ProbeResponse, TimestampColumn, TimeUnit, TimestampSource};
use crate::round_half_away;
use latent::{latent_z, LabelScale, LatentParams};
use signal::{device_stream, DeviceRecipe, NoiseRates, SessionContext, Timeline, MARGIN_MS};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    ConfigInvalid(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no generated cohort at {0}")]
    MissingCohort(PathBuf),
    #[error("cannot parse {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Label proportions of the published probe histogram (237/206/141/71/60 of 715).
pub const PUBLISHED_PROPORTIONS: [f64; 5] = [237.0 / 715.0, 206.0 / 715.0, 141.0 / 715.0, 71.0 / 715.0, 60.0 / 715.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub participants: usize,
    pub videos_per_participant: usize,
    /// Distinct videos participants draw from.
    pub video_pool: usize,
    pub video_length_s: f64,
    pub probe_interval_s: f64,
    /// Coupling `κ` per modality key; absent modalities are uncoupled.
    pub coupling: BTreeMap<String, f64>,
    pub label_proportions: [f64; 5],
    /// AR(1) coefficient of the latent per trace step.
    pub ar_coefficient: f64,
    /// Latent shift (in latent standard deviations) from video start to end.
    pub drift: f64,
    pub participant_sd: f64,
    pub video_sd: f64,
    /// Latent-scale noise between the trajectory and the reported label.
    pub label_noise: f64,
    /// Amplitude of the label-independent part of every carrier.
    pub sensor_noise: f64,
    pub exclusion_rate: f64,
    /// Probability of dropping a row (or a whole packet).
    pub drop_rate: f64,
    pub missing_rate: f64,
    /// Timestamp jitter as a fraction of the sample period.
    pub jitter: f64,
    pub trace_rate_hz: f64,
    pub start_epoch_ms: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            participants: 16,
            videos_per_participant: 4,
            video_pool: 8,
            video_length_s: 600.0,
            probe_interval_s: 60.0,
            coupling: BTreeMap::new(),
            label_proportions: PUBLISHED_PROPORTIONS,
            ar_coefficient: 0.98,
            drift: 0.0,
            participant_sd: 0.45,
            video_sd: 0.5,
            label_noise: 0.35,
            sensor_noise: 1.0,
            exclusion_rate: 0.01,
            drop_rate: 0.001,
            missing_rate: 0.0005,
            jitter: 0.25,
            trace_rate_hz: 1.0,
            start_epoch_ms: 1_700_000_000_000.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    /// Config with the given modalities coupled at strength `kappa`.
    pub fn with_coupling(mut self, keys: &[&str], kappa: f64) -> Self {
        for k in keys {
            self.coupling.insert(k.to_string(), kappa);
        }
        self
    }

    pub fn validate(&self, spec: &ChannelSpec) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::ConfigInvalid(m));
        if self.participants < 4 {
            return fail(format!("need at least 4 participants for grouped folds, got {}", self.participants));
        }
        if self.videos_per_participant == 0 || self.videos_per_participant > self.video_pool {
            return fail(format!("videos_per_participant must lie in 1..={}", self.video_pool));
        }
        if !(self.probe_interval_s >= 45.0) {
            return fail(format!("probe interval must be at least 45 s, got {}", self.probe_interval_s));
        }
        if !(self.video_length_s >= self.probe_interval_s) {
            return fail("video shorter than one probe interval".into());
        }
        for (key, kappa) in &self.coupling {
            if spec.modalities.iter().all(|m| &m.key != key) {
                return fail(format!("unknown modality `{key}` in coupling"));
            }
            if !(0.0..=1.0).contains(kappa) {
                return fail(format!("coupling for `{key}` must lie in [0, 1], got {kappa}"));
            }
        }
        let total: f64 = self.label_proportions.iter().sum();
        if self.label_proportions.iter().any(|p| !(*p > 0.0)) || (total - 1.0).abs() > 1e-6 {
            return fail("label proportions must be positive and sum to 1".into());
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return fail("ar_coefficient must lie in [0, 1)".into());
        }
        if self.participant_sd < 0.0 || self.video_sd < 0.0 || self.participant_sd.powi(2) + self.video_sd.powi(2) > 1.0 {
            return fail("participant_sd² + video_sd² must not exceed 1".into());
        }
        for (name, v) in [("exclusion_rate", self.exclusion_rate), ("drop_rate", self.drop_rate), ("missing_rate", self.missing_rate)] {
            if !(0.0..1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1)"));
            }
        }
        if !(0.0..=0.5).contains(&self.jitter) {
            return fail("jitter must lie in [0, 0.5]".into());
        }
        if !(self.trace_rate_hz > 0.0) || !(self.label_noise >= 0.0) || !(self.sensor_noise >= 0.0) || !self.drift.is_finite() {
            return fail("trace rate must be positive and noise scales non-negative".into());
        }
        Ok(())
    }

    pub fn probes_per_session(&self) -> usize {
        (self.video_length_s / self.probe_interval_s + 1e-9).floor() as usize
    }

    fn kappa(&self, key: &str) -> f64 {
        self.coupling.get(key).copied().unwrap_or(0.0)
    }
}

/// Timing and identity of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPlan {
    pub participant_index: usize,
    pub session_index: usize,
    pub video_index: usize,
    pub participant_id: String,
    pub session_id: String,
    pub video_id: String,
    pub start_ms: f64,
    pub end_ms: f64,
    /// Wall-clock time of each probe, when the video pauses.
    pub probe_wall_ms: Vec<f64>,
    /// Video time of each probe.
    pub probe_video_s: Vec<f64>,
    timeline: Timeline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortPlan {
    pub sessions: Vec<SessionPlan>,
    participant_effects: Vec<ParticipantEffects>,
    video_effects: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct ParticipantEffects {
    latent: f64,
    heart_hz: f64,
    prior_knowledge: f64,
    /// One offset per tensor channel, in channel sd units.
    offsets: Vec<f64>,
}

mod stream_tag {
    pub const COHORT: u64 = 1;
    pub const PARTICIPANT: u64 = 2;
    pub const VIDEO: u64 = 3;
    pub const TIMING: u64 = 4;
    pub const LATENT: u64 = 5;
    pub const PROBES: u64 = 6;
    pub const SENSOR: u64 = 7;
    pub const QUIZ: u64 = 8;
}

/// Independent generator for one (purpose, participant, session, ...) tuple.
fn sub_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut h = seed ^ 0x6A09_E667_F3BC_C908;
    for &t in tags {
        h = splitmix(h ^ splitmix(t.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn id(prefix: &str, i: usize, n: usize) -> String {
    let width = n.to_string().len().max(2);
    format!("{prefix}{:0width$}", i + 1)
}

/// Draws the cohort layout: video assignment, pauses, probe times and
/// participant / video random effects.
pub fn plan_cohort(config: &SynthConfig, spec: &ChannelSpec) -> Result<CohortPlan, SynthError> {
    config.validate(spec)?;
    let mut cohort_rng = sub_rng(config.seed, &[stream_tag::COHORT]);
    let n_probes = config.probes_per_session();
    let video_effects = standardized(
        (0..config.video_pool).map(|v| sub_rng(config.seed, &[stream_tag::VIDEO, v as u64]).sample(StandardNormal)).collect(),
    );
    let mut participant_effects = Vec::with_capacity(config.participants);
    let mut sessions = Vec::new();
    for p in 0..config.participants {
        let mut rng = sub_rng(config.seed, &[stream_tag::PARTICIPANT, p as u64]);
        participant_effects.push(ParticipantEffects {
            latent: rng.sample(StandardNormal),
            heart_hz: (70.0 + 8.0 * rng.sample::<f64, _>(StandardNormal)).clamp(50.0, 100.0) / 60.0,
            prior_knowledge: rng.sample(StandardNormal),
            offsets: (0..spec.n_channels()).map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal)).collect(),
        });
        let mut videos: Vec<usize> = (0..config.video_pool).collect();
        videos.shuffle(&mut cohort_rng);
        let participant_id = id("P", p, config.participants);
        let day_start = config.start_epoch_ms + p as f64 * 86_400_000.0;
        let mut cursor = day_start;
        for (s, &video_index) in videos.iter().take(config.videos_per_participant).enumerate() {
            let mut rng = sub_rng(config.seed, &[stream_tag::TIMING, p as u64, s as u64]);
            let start_ms = (cursor + 60_000.0 * (1.0 + rng.random::<f64>())).round();
            let mut segments = Vec::with_capacity(n_probes + 1);
            let mut probe_wall_ms = Vec::with_capacity(n_probes);
            let mut probe_video_s = Vec::with_capacity(n_probes);
            let mut wall = start_ms;
            let mut video = 0.0;
            for k in 0..n_probes {
                let until = (k + 1) as f64 * config.probe_interval_s;
                segments.push((wall, video, until - video));
                wall += (until - video) * 1000.0;
                video = until;
                probe_wall_ms.push(crate::round_to_decimals(wall, 3));
                probe_video_s.push(until);
                wall += 1000.0 * (3.0 + 5.0 * rng.random::<f64>());
            }
            if video < config.video_length_s {
                segments.push((wall, video, config.video_length_s - video));
                wall += (config.video_length_s - video) * 1000.0;
            }
            let end_ms = wall.round();
            sessions.push(SessionPlan {
                participant_index: p,
                session_index: s,
                video_index,
                participant_id: participant_id.clone(),
                session_id: format!("{participant_id}_S{}", s + 1),
                video_id: id("V", video_index, config.video_pool),
                start_ms,
                end_ms,
                probe_wall_ms,
                probe_video_s,
                timeline: Timeline { segments },
            });
            cursor = end_ms + MARGIN_MS;
        }
    }
    let latent = standardized(participant_effects.iter().map(|e| e.latent).collect());
    for (e, z) in participant_effects.iter_mut().zip(latent) {
        e.latent = z;
    }
    Ok(CohortPlan { sessions, participant_effects, video_effects })
}

/// Centers and scales random effects over the cohort so that small cohorts
/// still follow the configured label marginals.
fn standardized(mut v: Vec<f64>) -> Vec<f64> {
    let mu = crate::numeric::mean(&v);
    let sd = crate::numeric::population_std(&v);
    for x in v.iter_mut() {
        *x = if sd > 0.0 { (*x - mu) / sd } else { 0.0 };
    }
    v
}

struct SessionLatent {
    z: Vec<f64>,
    trace: LatentTrace,
}

fn session_latent(config: &SynthConfig, plan: &CohortPlan, s: &SessionPlan, scale: &LabelScale) -> SessionLatent {
    let n = (config.video_length_s * config.trace_rate_hz).round().max(1.0) as usize;
    let params = LatentParams {
        participant_effect: plan.participant_effects[s.participant_index].latent,
        video_effect: plan.video_effects[s.video_index],
        participant_sd: config.participant_sd,
        video_sd: config.video_sd,
        ar: config.ar_coefficient,
        drift: config.drift,
    };
    let mut rng = sub_rng(config.seed, &[stream_tag::LATENT, s.participant_index as u64, s.session_index as u64]);
    let z = latent_z(&params, n, &mut rng);
    let values = z.iter().map(|&v| scale.to_scale(v)).collect();
    let trace = LatentTrace {
        participant_id: s.participant_id.clone(),
        session_id: s.session_id.clone(),
        video_id: s.video_id.clone(),
        rate_hz: config.trace_rate_hz,
        values,
    };
    SessionLatent { z, trace }
}

/// Latent trajectories of every session, in plan order.
pub fn latent_traces(config: &SynthConfig, plan: &CohortPlan) -> Vec<LatentTrace> {
    let scale = LabelScale::new(config.label_proportions);
    plan.sessions.iter().map(|s| session_latent(config, plan, s, &scale).trace).collect()
}

fn session_probes(config: &SynthConfig, s: &SessionPlan, latent: &SessionLatent, scale: &LabelScale) -> Vec<ProbeRecord> {
    let mut rng = sub_rng(config.seed, &[stream_tag::PROBES, s.participant_index as u64, s.session_index as u64]);
    let norm = (1.0 + config.label_noise * config.label_noise).sqrt();
    s.probe_wall_ms
        .iter()
        .zip(&s.probe_video_s)
        .map(|(&wall, &video)| {
            let noise: f64 = rng.sample(StandardNormal);
            let distracted = rng.random::<f64>() < config.exclusion_rate;
            let z = latent::interpolate(&latent.z, video * config.trace_rate_hz);
            let level = round_half_away(scale.to_scale((z + config.label_noise * noise) / norm)).clamp(1.0, 5.0) as u8;
            ProbeRecord {
                participant_id: s.participant_id.clone(),
                session_id: s.session_id.clone(),
                video_id: s.video_id.clone(),
                video_time_s: video,
                wall_clock_ms: wall,
                response: if distracted { ProbeResponse::Excluded } else { ProbeResponse::Level(level) },
            }
        })
        .collect()
}

/// Samples per timestamp for devices that deliver packets.
fn packet_size(device_id: &str) -> usize {
    match device_id {
        "polar" => 13,
        "ring" => 5,
        _ => 1,
    }
}

/// The manifest policy each synthetic device is written with.
pub fn device_policy(device_id: &str, rate_hz: f64) -> DevicePolicy {
    let source = match device_id {
        "band_eda" | "band_hr" => TimestampSource::SystemTime,
        "polar" | "ring" => TimestampSource::PacketEmbedded,
        _ => TimestampSource::ReceiverArrival,
    };
    DevicePolicy {
        rate_hz,
        column: TimestampColumn::Primary,
        unit: TimeUnit::Milliseconds,
        source,
        offset_ms: 0.0,
        packetized: packet_size(device_id) > 1,
        quality_filter: None,
    }
}

/// One session exactly as ingest would load it from the written files.
pub fn generate_session(config: &SynthConfig, spec: &ChannelSpec, plan: &CohortPlan, index: usize) -> LoadedSession {
    let s = &plan.sessions[index];
    let scale = LabelScale::new(config.label_proportions);
    let latent = session_latent(config, plan, s, &scale);
    let (mean, sd) = scale.moments();
    let drive: Vec<f64> = latent.trace.values.iter().map(|e| (e - mean) / sd).collect();
    let effects = &plan.participant_effects[s.participant_index];
    let ctx = SessionContext {
        start_ms: s.start_ms,
        end_ms: s.end_ms,
        timeline: &s.timeline,
        drive: &drive,
        trace_rate_hz: config.trace_rate_hz,
        heart_hz: effects.heart_hz,
    };
    let noise = NoiseRates {
        sensor_noise: config.sensor_noise,
        jitter: config.jitter,
        drop_rate: config.drop_rate,
        missing_rate: config.missing_rate,
    };
    let mut streams = BTreeMap::new();
    for (d, (device_id, rate)) in spec.devices().into_iter().enumerate() {
        let rows: Vec<usize> = (0..spec.n_channels()).filter(|&c| spec.channels[c].device_id == device_id).collect();
        let channels: Vec<&str> = rows.iter().map(|&c| spec.channels[c].stream_channel.as_str()).collect();
        let offsets: Vec<f64> = rows.iter().map(|&c| effects.offsets[c]).collect();
        let kappas: Vec<f64> =
            rows.iter().map(|&c| spec.channels[c].modality.map_or(0.0, |m| config.kappa(&spec.modalities[m].key))).collect();
        let policy = device_policy(device_id, rate);
        let recipe = DeviceRecipe { device_id, rate_hz: rate, channels: &channels, offsets: &offsets, kappas: &kappas, packet: packet_size(device_id), source: policy.source };
        let mut rng = sub_rng(config.seed, &[stream_tag::SENSOR, s.participant_index as u64, s.session_index as u64, d as u64]);
        streams.insert(device_id.to_string(), device_stream(&ctx, &recipe, &noise, &mut rng));
    }
    LoadedSession {
        participant_id: s.participant_id.clone(),
        session_id: s.session_id.clone(),
        video_id: s.video_id.clone(),
        start_ms: s.start_ms,
        end_ms: s.end_ms,
        streams,
        probes: session_probes(config, s, &latent, &scale),
        diagnostics: Vec::new(),
    }
}

/// Pre/post quiz scores: the normalized gain falls with the session's mean
/// difficulty, so per-video gains anti-correlate with per-video difficulty.
pub fn quiz_scores(config: &SynthConfig, plan: &CohortPlan) -> Vec<QuizRecord> {
    let scale = LabelScale::new(config.label_proportions);
    let (mean, sd) = scale.moments();
    plan.sessions
        .iter()
        .map(|s| {
            let latent = session_latent(config, plan, s, &scale);
            let difficulty = crate::numeric::mean(&latent.trace.values);
            let mut rng = sub_rng(config.seed, &[stream_tag::QUIZ, s.participant_index as u64, s.session_index as u64]);
            let prior = plan.participant_effects[s.participant_index].prior_knowledge;
            let pre = round_half_away(2.0 + 0.8 * prior + 0.8 * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 5.0);
            let gain = (0.7 - 0.35 * (difficulty - mean) / sd + 0.12 * rng.sample::<f64, _>(StandardNormal)).clamp(-0.3, 1.0);
            let post = round_half_away(pre + gain * (5.0 - pre)).clamp(0.0, 5.0);
            QuizRecord { participant_id: s.participant_id.clone(), video_id: s.video_id.clone(), pre: pre as u8, post: post as u8 }
        })
        .collect()
}

/// Windows and quiz scores of a cohort generated in memory.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub windows: Vec<WindowSample>,
    /// `(session_id, probes, excluded probes)` per session.
    pub session_counts: Vec<(String, usize, usize)>,
    pub quiz: Vec<QuizRecord>,
}

/// Generates every session in memory and keeps only its windows, so the
/// raw streams of at most a few sessions are alive at once. Equivalent to
/// writing the cohort, ingesting it and assembling windows.
pub fn synth_windows(config: &SynthConfig, spec: &ChannelSpec, window: &WindowConfig) -> Result<SynthCorpus, SynthError> {
    let plan = plan_cohort(config, spec)?;
    let mut order: Vec<usize> = (0..plan.sessions.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&plan.sessions[a], &plan.sessions[b]);
        (&x.participant_id, &x.session_id).cmp(&(&y.participant_id, &y.session_id))
    });
    let per_session: Vec<Result<_, DatasetError>> = order
        .par_iter()
        .map(|&i| assemble_windows(std::slice::from_ref(&generate_session(config, spec, &plan, i)), spec, window))
        .collect();
    let mut out = SynthCorpus { windows: Vec::new(), session_counts: Vec::new(), quiz: quiz_scores(config, &plan) };
    for assembled in per_session {
        let assembled = assembled?;
        out.windows.extend(assembled.windows);
        out.session_counts.extend(assembled.session_counts);
    }
    Ok(out)
}
