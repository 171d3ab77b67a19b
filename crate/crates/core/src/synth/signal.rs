use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::latent::interpolate;
use crate::ingest::{SensorStream, TimestampSource};
use crate::round_to_decimals;

/// Wall-clock to video-time mapping of a session whose video pauses at
/// every probe.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Timeline {
    /// `(wall_start_ms, video_start_s, duration_s)` per playing segment.
    pub segments: Vec<(f64, f64, f64)>,
}

impl Timeline {
    pub(crate) fn video_time_s(&self, t_ms: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.0 <= t_ms);
        if i == 0 {
            return 0.0;
        }
        let (wall, video, duration) = self.segments[i - 1];
        video + ((t_ms - wall) / 1000.0).min(duration)
    }
}

#[derive(Debug, Clone, Copy)]
enum Periodic {
    None,
    Heart,
    Fixed(f64),
}

/// Unit-free waveform recipe of one channel: mixing weights of a slow AR(1)
/// component (time constant `tau_s`), white noise and a periodic term,
/// mapped to physical units by `mean` and `sd`.
#[derive(Debug, Clone, Copy)]
struct Profile {
    mean: f64,
    sd: f64,
    slow: f64,
    white: f64,
    tau_s: f64,
    periodic: Periodic,
    periodic_weight: f64,
}

const fn p(mean: f64, sd: f64, slow: f64, white: f64, tau_s: f64, periodic: Periodic, periodic_weight: f64) -> Profile {
    Profile { mean, sd, slow, white, tau_s, periodic, periodic_weight }
}

fn profile(channel: &str) -> Profile {
    match channel {
        "gaze_x" | "gaze_y" => p(0.5, 0.08, 0.6, 0.8, 2.0, Periodic::None, 0.0),
        "head_x" | "head_y" | "head_z" => p(0.0, 4.0, 0.6, 0.8, 4.0, Periodic::None, 0.0),
        "eda_kohm" => p(350.0, 40.0, 0.6, 0.8, 5.0, Periodic::None, 0.0),
        "hr_bpm" => p(72.0, 6.0, 0.6, 0.8, 5.0, Periodic::None, 0.0),
        "ppg_730_left_outer" => p(30_000.0, 800.0, 0.4, 0.3, 8.0, Periodic::Heart, 0.85),
        "ppg_green" => p(12_000.0, 500.0, 0.4, 0.3, 8.0, Periodic::Heart, 0.85),
        "temp_inner_left" => p(33.5, 0.3, 0.6, 0.8, 5.0, Periodic::None, 0.0),
        "temp_inner_right" => p(33.2, 0.3, 0.6, 0.8, 5.0, Periodic::None, 0.0),
        "temp_outer" => p(31.0, 0.4, 0.6, 0.8, 5.0, Periodic::None, 0.0),
        "acc_x" | "acc_y" => p(0.0, 0.05, 0.5, 0.85, 1.0, Periodic::None, 0.0),
        "acc_z" => p(1.0, 0.05, 0.5, 0.85, 1.0, Periodic::None, 0.0),
        "gyro_x" | "gyro_y" | "gyro_z" => p(0.0, 2.0, 0.5, 0.85, 1.0, Periodic::None, 0.0),
        "ecg_uv" => p(0.0, 300.0, 0.3, 0.3, 4.0, Periodic::Heart, 0.9),
        "eeg_af7" | "eeg_af8" => p(0.0, 25.0, 0.4, 0.7, 2.0, Periodic::Fixed(10.0), 0.6),
        _ => p(0.0, 1.0, 0.6, 0.8, 5.0, Periodic::None, 0.0),
    }
}

/// Everything a device stream needs to know about its session.
pub(crate) struct SessionContext<'a> {
    pub start_ms: f64,
    pub end_ms: f64,
    pub timeline: &'a Timeline,
    /// Standardized latent `(e − mean) / sd` on the trace grid.
    pub drive: &'a [f64],
    pub trace_rate_hz: f64,
    pub heart_hz: f64,
}

pub(crate) struct DeviceRecipe<'a> {
    pub device_id: &'a str,
    pub rate_hz: f64,
    pub channels: &'a [&'a str],
    /// Per-channel participant offsets in units of the channel sd.
    pub offsets: &'a [f64],
    /// Per-channel coupling to the latent.
    pub kappas: &'a [f64],
    /// Samples per packet; 1 for unpacketized streams.
    pub packet: usize,
    pub source: TimestampSource,
}

pub(crate) struct NoiseRates {
    pub sensor_noise: f64,
    pub jitter: f64,
    pub drop_rate: f64,
    pub missing_rate: f64,
}

/// Streams extend this far beyond both session bounds.
pub(crate) const MARGIN_MS: f64 = 1000.0;

/// Generates one device stream with timestamps exactly as ingest reconstructs
/// them (packet time plus `j * 1000 / rate`) and values on a 4-decimal grid.
pub(crate) fn device_stream(ctx: &SessionContext, recipe: &DeviceRecipe, noise: &NoiseRates, rng: &mut ChaCha8Rng) -> SensorStream {
    let period = 1000.0 / recipe.rate_hz;
    let first = ctx.start_ms - MARGIN_MS;
    let last = ctx.end_ms + MARGIN_MS;
    let packet = recipe.packet.max(1);
    let n_packets = (((last - first) / period).floor() as usize + 1).div_ceil(packet);
    let profiles: Vec<Profile> = recipe.channels.iter().map(|c| profile(c)).collect();
    let phases: Vec<f64> = profiles.iter().map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    let mut slow: Vec<f64> = profiles.iter().map(|_| rng.sample(StandardNormal)).collect();
    let decay: Vec<f64> = profiles.iter().map(|p| (-period / 1000.0 / p.tau_s).exp()).collect();

    let capacity = n_packets * packet;
    let mut timestamps = Vec::with_capacity(capacity);
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(capacity); recipe.channels.len()];
    for k in 0..n_packets {
        let nominal = first + (k * packet) as f64 * period;
        let guarded = nominal < ctx.start_ms + MARGIN_MS || nominal > ctx.end_ms - MARGIN_MS;
        let dropped = !guarded && rng.random::<f64>() < noise.drop_rate;
        let stamp = round_to_decimals(nominal + noise.jitter * period * rng.random::<f64>(), 3);
        for j in 0..packet {
            let t = if packet > 1 { stamp + j as f64 * period } else { stamp };
            let nominal_j = nominal + j as f64 * period;
            let drive = interpolate(ctx.drive, ctx.timeline.video_time_s(nominal_j) * ctx.trace_rate_hz);
            let t_s = (nominal_j - ctx.start_ms) / 1000.0;
            if !dropped {
                timestamps.push(t);
            }
            for (c, prof) in profiles.iter().enumerate() {
                let eps: f64 = rng.sample(StandardNormal);
                let white: f64 = rng.sample(StandardNormal);
                slow[c] = decay[c] * slow[c] + (1.0 - decay[c] * decay[c]).sqrt() * eps;
                let periodic = match prof.periodic {
                    Periodic::None => 0.0,
                    Periodic::Heart => (std::f64::consts::TAU * ctx.heart_hz * t_s + phases[c]).sin(),
                    Periodic::Fixed(hz) => (std::f64::consts::TAU * hz * t_s + phases[c]).sin(),
                };
                let base = prof.slow * slow[c] + prof.white * white + prof.periodic_weight * std::f64::consts::SQRT_2 * periodic;
                let kappa = recipe.kappas[c];
                let scale = (1.0 + 0.5 * kappa * drive).max(0.25);
                let x = prof.mean + prof.sd * (recipe.offsets[c] + kappa * drive + noise.sensor_noise * scale * base);
                let missing = rng.random::<f64>() < noise.missing_rate;
                if !dropped {
                    values[c].push((!missing).then(|| round_to_decimals(x, 4)));
                }
            }
        }
    }
    SensorStream {
        device_id: recipe.device_id.to_string(),
        channels: recipe.channels.iter().map(|c| c.to_string()).collect(),
        timestamps_ms: timestamps,
        values,
        native_rate_hz: recipe.rate_hz,
        timestamp_source: recipe.source,
    }
}
