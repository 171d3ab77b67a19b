use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChannelSpec, DatasetError};
use crate::ingest::{LoadedSession, ProbeRecord, ProbeResponse, SensorStream};
use crate::round_to_decimals;

/// How the trailing window is measured when the video was paused in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowAnchor {
    /// Contiguous wall-clock interval ending at the probe.
    #[default]
    WallClock,
    /// 44 s of played video, skipping earlier probe pauses.
    VideoTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_ms: f64,
    pub rate_hz: f64,
    #[serde(default)]
    pub anchor: WindowAnchor,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { window_ms: 44_000.0, rate_hz: 50.0, anchor: WindowAnchor::WallClock }
    }
}

impl WindowConfig {
    pub fn n_samples(&self) -> usize {
        (self.window_ms * self.rate_hz / 1000.0).round() as usize
    }

    pub fn step_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }
}

/// Wall-clock intervals `[start, end)` covered by a window, in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpan {
    pub segments: Vec<[f64; 2]>,
}

impl WindowSpan {
    pub fn contiguous(start_ms: f64, end_ms: f64) -> Self {
        WindowSpan { segments: vec![[start_ms, end_ms]] }
    }

    pub fn start_ms(&self) -> f64 {
        self.segments[0][0]
    }

    pub fn end_ms(&self) -> f64 {
        self.segments[self.segments.len() - 1][1]
    }

    /// Grid points `start + j * step` laid along the concatenated segments.
    pub fn grid(&self, n: usize, step_ms: f64) -> Vec<f64> {
        let mut grid = Vec::with_capacity(n);
        let mut seg = 0;
        let mut consumed = 0.0;
        for j in 0..n {
            let offset = j as f64 * step_ms;
            while seg + 1 < self.segments.len() && offset >= consumed + (self.segments[seg][1] - self.segments[seg][0]) {
                consumed += self.segments[seg][1] - self.segments[seg][0];
                seg += 1;
            }
            grid.push(self.segments[seg][0] + (offset - consumed));
        }
        grid
    }

    /// Sample index ranges of `stream` that fall inside the span.
    pub fn sample_ranges(&self, stream: &SensorStream) -> Vec<std::ops::Range<usize>> {
        self.segments.iter().map(|[s, e]| stream.span_indices(*s, *e)).collect()
    }
}

/// Span of the window trailing probe `index` of one video (probes sorted by wall clock).
pub fn window_span(probes: &[ProbeRecord], index: usize, config: &WindowConfig) -> WindowSpan {
    let end = probes[index].wall_clock_ms;
    match config.anchor {
        WindowAnchor::WallClock => WindowSpan::contiguous(end - config.window_ms, end),
        WindowAnchor::VideoTime => {
            let mut remaining = config.window_ms;
            let mut segments = Vec::new();
            let mut i = index;
            loop {
                let seg_end = probes[i].wall_clock_ms;
                let played = if i == 0 {
                    f64::INFINITY
                } else {
                    (probes[i].video_time_s - probes[i - 1].video_time_s) * 1000.0
                };
                let take = remaining.min(played.max(0.0));
                if take > 0.0 {
                    segments.push([seg_end - take, seg_end]);
                }
                remaining -= take;
                if remaining <= 0.0 || i == 0 {
                    break;
                }
                i -= 1;
            }
            segments.reverse();
            WindowSpan { segments }
        }
    }
}

/// Linear interpolation of native samples onto `grid`. Grid points outside the
/// native coverage, or bracketed by a missing sample, become 0.0.
pub fn resample_channel(timestamps_ms: &[f64], values: &[Option<f64>], grid_ms: &[f64]) -> Vec<f64> {
    debug_assert_eq!(timestamps_ms.len(), values.len());
    let n = timestamps_ms.len();
    let mut out = vec![0.0; grid_ms.len()];
    if n == 0 {
        return out;
    }
    let mut hi = 0;
    for (slot, &g) in out.iter_mut().zip(grid_ms) {
        // first sample with t >= g
        while hi < n && timestamps_ms[hi] < g {
            hi += 1;
        }
        if hi == n {
            continue;
        }
        if timestamps_ms[hi] == g {
            *slot = values[hi].unwrap_or(0.0);
            continue;
        }
        if hi == 0 {
            continue;
        }
        let lo = hi - 1;
        if let (Some(a), Some(b)) = (values[lo], values[hi]) {
            let (t0, t1) = (timestamps_ms[lo], timestamps_ms[hi]);
            *slot = a + (b - a) * (g - t0) / (t1 - t0);
        }
    }
    out
}

/// Relative position of a window within its video, rounded to one decimal.
pub fn compute_video_progress(probe_index: usize, video_probe_times: &[f64], window_s: f64) -> Result<f64, DatasetError> {
    let max_end = video_probe_times.iter().copied().fold(f64::NAN, f64::max);
    if video_probe_times.is_empty() || !(max_end > 0.0) {
        return Err(DatasetError::EmptyVideo);
    }
    let t_end = video_probe_times[probe_index];
    let t_start = (t_end - window_s).max(0.0);
    Ok(round_to_decimals(((t_start + t_end) / 2.0) / max_end, 1).clamp(0.0, 1.0))
}

/// One supervised prediction instance.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub participant_id: String,
    pub session_id: String,
    pub video_id: String,
    pub probe_index: usize,
    pub span: WindowSpan,
    pub n_channels: usize,
    pub n_samples: usize,
    /// Channel-major: row `c` is `tensor[c * n_samples..(c + 1) * n_samples]`.
    pub tensor: Vec<f32>,
    pub modality_mask: Vec<bool>,
    pub video_progress: f64,
    pub label: u8,
}

impl WindowSample {
    /// Checks the shape, range and mask invariants.
    pub fn validate(&self, spec: &ChannelSpec) -> Result<(), DatasetError> {
        let fail = |reason: String| Err(DatasetError::InvalidWindow(reason));
        if self.n_channels != spec.n_channels() || self.tensor.len() != self.n_channels * self.n_samples {
            return fail(format!("tensor shape {}x{} does not match the channel spec", self.n_channels, self.n_samples));
        }
        if self.modality_mask.len() != spec.n_modalities() {
            return fail("modality mask length mismatch".into());
        }
        if !(0.0..=1.0).contains(&self.video_progress) {
            return fail(format!("video progress {} outside [0,1]", self.video_progress));
        }
        if !(1..=5).contains(&self.label) {
            return fail(format!("label {} outside 1..5", self.label));
        }
        for (m, group) in spec.modalities.iter().enumerate() {
            if !self.modality_mask[m] && group.channels.iter().any(|&c| self.row(c).iter().any(|&v| v != 0.0)) {
                return fail(format!("masked modality {} has non-zero rows", group.key));
            }
        }
        Ok(())
    }

    pub fn row(&self, channel: usize) -> &[f32] {
        &self.tensor[channel * self.n_samples..(channel + 1) * self.n_samples]
    }

    pub fn row_mut(&mut self, channel: usize) -> &mut [f32] {
        &mut self.tensor[channel * self.n_samples..(channel + 1) * self.n_samples]
    }

    /// Labels encoded 0–4 for the regressors.
    pub fn encoded_label(&self) -> f64 {
        f64::from(self.label) - 1.0
    }
}

/// Builds the standardized-layout window for one probe.
pub fn build_window(
    streams: &BTreeMap<String, SensorStream>,
    probe: &ProbeRecord,
    probe_index: usize,
    span: WindowSpan,
    video_progress: f64,
    spec: &ChannelSpec,
    config: &WindowConfig,
) -> Result<WindowSample, DatasetError> {
    let label = match probe.response {
        ProbeResponse::Level(v) => v,
        ProbeResponse::Excluded => return Err(DatasetError::ExcludedProbe),
    };
    let n_samples = config.n_samples();
    let grid = span.grid(n_samples, config.step_ms());
    let mut tensor = vec![0f32; spec.n_channels() * n_samples];
    let mut mask = vec![false; spec.n_modalities()];

    for (c, desc) in spec.channels.iter().enumerate() {
        let row = &mut tensor[c * n_samples..(c + 1) * n_samples];
        let Some(m) = desc.modality else {
            row.fill(video_progress as f32);
            continue;
        };
        let Some(stream) = streams.get(&desc.device_id) else { continue };
        let Some(k) = stream.channel_index(&desc.stream_channel) else { continue };
        let column = &stream.values[k];
        let ranges = span.sample_ranges(stream);
        if ranges.iter().any(|r| column[r.clone()].iter().any(Option::is_some)) {
            mask[m] = true;
        }
        // include the bracketing neighbours on either side of the span
        let lo = ranges.first().map(|r| r.start).unwrap_or(0).saturating_sub(1);
        let hi = (ranges.last().map(|r| r.end).unwrap_or(0) + 1).min(stream.len());
        let resampled = resample_channel(&stream.timestamps_ms[lo..hi], &column[lo..hi], &grid);
        for (dst, v) in row.iter_mut().zip(resampled) {
            *dst = v as f32;
        }
    }
    // a modality counts as absent only when none of its rows saw a sample; rows
    // of an absent modality are zero by construction
    for (m, group) in spec.modalities.iter().enumerate() {
        if !mask[m] {
            for &c in &group.channels {
                tensor[c * n_samples..(c + 1) * n_samples].fill(0.0);
            }
        }
    }

    let window = WindowSample {
        participant_id: probe.participant_id.clone(),
        session_id: probe.session_id.clone(),
        video_id: probe.video_id.clone(),
        probe_index,
        span,
        n_channels: spec.n_channels(),
        n_samples,
        tensor,
        modality_mask: mask,
        video_progress,
        label,
    };
    window.validate(spec)?;
    Ok(window)
}

/// Windows of one or more sessions plus exclusion bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct AssembledWindows {
    pub windows: Vec<WindowSample>,
    /// `(session_id, probes in log, excluded probes)` per session.
    pub session_counts: Vec<(String, usize, usize)>,
}

impl AssembledWindows {
    pub fn excluded(&self) -> usize {
        self.session_counts.iter().map(|(_, _, x)| x).sum()
    }
}

/// Builds every supervised window. Sessions are processed in
/// (participant, session) order so the result does not depend on input order.
pub fn assemble_windows(sessions: &[LoadedSession], spec: &ChannelSpec, config: &WindowConfig) -> Result<AssembledWindows, DatasetError> {
    let mut order: Vec<&LoadedSession> = sessions.iter().collect();
    order.sort_by(|a, b| (&a.participant_id, &a.session_id).cmp(&(&b.participant_id, &b.session_id)));
    let mut out = AssembledWindows::default();
    for session in order {
        let probes = &session.probes;
        let times: Vec<f64> = probes.iter().map(|p| p.video_time_s).collect();
        let mut excluded = 0;
        for (i, probe) in probes.iter().enumerate() {
            if probe.response == ProbeResponse::Excluded {
                excluded += 1;
                continue;
            }
            let progress = compute_video_progress(i, &times, config.window_ms / 1000.0)?;
            let span = window_span(probes, i, config);
            out.windows.push(build_window(&session.streams, probe, i, span, progress, spec, config)?);
        }
        out.session_counts.push((session.session_id.clone(), probes.len(), excluded));
    }
    Ok(out)
}
