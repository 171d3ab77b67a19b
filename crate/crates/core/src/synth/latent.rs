use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Per-session attention-difficulty trajectory `e(t)` on the 1–5 scale,
/// sampled on a regular video-time grid starting at 0 s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentTrace {
    pub participant_id: String,
    pub session_id: String,
    pub video_id: String,
    pub rate_hz: f64,
    pub values: Vec<f64>,
}

impl LatentTrace {
    /// Linear interpolation at video time `t_s`, held constant past either end.
    pub fn at(&self, t_s: f64) -> f64 {
        interpolate(&self.values, t_s * self.rate_hz)
    }
}

pub(crate) fn interpolate(values: &[f64], pos: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    if pos <= 0.0 {
        return values[0];
    }
    let i = pos.floor() as usize;
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let f = pos - i as f64;
    values[i] * (1.0 - f) + values[i + 1] * f
}

/// Maps a standard-normal latent to the 1–5 scale so that rounding yields
/// label `k` with probability `proportions[k-1]`: within label bin `k` the
/// mapping is uniform on `[k − 0.5, k + 0.5)`, then clipped to `[1, 5]`.
#[derive(Debug, Clone)]
pub(crate) struct LabelScale {
    cumulative: [f64; 6],
    proportions: [f64; 5],
    normal: Normal,
}

impl LabelScale {
    pub(crate) fn new(proportions: [f64; 5]) -> Self {
        let mut cumulative = [0.0; 6];
        for k in 0..5 {
            cumulative[k + 1] = cumulative[k] + proportions[k];
        }
        LabelScale { cumulative, proportions, normal: Normal::standard() }
    }

    pub(crate) fn to_scale(&self, z: f64) -> f64 {
        let u = self.normal.cdf(z);
        let total = self.cumulative[5];
        let u = (u * total).clamp(0.0, total);
        let k = (1..=5).find(|&k| u < self.cumulative[k]).unwrap_or(5);
        let within = ((u - self.cumulative[k - 1]) / self.proportions[k - 1]).clamp(0.0, 1.0);
        (k as f64 - 0.5 + within).clamp(1.0, 5.0)
    }

    /// Mean and standard deviation of the unclipped scale variable.
    pub(crate) fn moments(&self) -> (f64, f64) {
        let total = self.cumulative[5];
        let mean: f64 = self.proportions.iter().enumerate().map(|(i, p)| p / total * (i + 1) as f64).sum();
        let second: f64 = self.proportions.iter().enumerate().map(|(i, p)| p / total * (((i + 1) as f64).powi(2) + 1.0 / 12.0)).sum();
        (mean, (second - mean * mean).sqrt())
    }
}

/// Unit-variance latent: participant and video random effects plus a
/// stationary AR(1) component, with optional linear drift over the video.
pub(crate) struct LatentParams {
    pub participant_effect: f64,
    pub video_effect: f64,
    pub participant_sd: f64,
    pub video_sd: f64,
    pub ar: f64,
    pub drift: f64,
}

pub(crate) fn latent_z(params: &LatentParams, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let residual = (1.0 - params.participant_sd.powi(2) - params.video_sd.powi(2)).max(0.0).sqrt();
    let innovation = (1.0 - params.ar * params.ar).sqrt();
    let base = params.participant_sd * params.participant_effect + params.video_sd * params.video_effect;
    let mut u: f64 = rng.sample(StandardNormal);
    (0..n)
        .map(|i| {
            if i > 0 {
                let eps: f64 = rng.sample(StandardNormal);
                u = params.ar * u + innovation * eps;
            }
            let progress = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            base + residual * u + params.drift * progress
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    const PUBLISHED: [f64; 5] = [0.331, 0.288, 0.197, 0.099, 0.084];

    #[test]
    fn scale_is_bounded_and_monotone() {
        let s = LabelScale::new(PUBLISHED);
        let mut prev = 0.0;
        for i in -600..=600 {
            let v = s.to_scale(f64::from(i) / 100.0);
            assert!((1.0..=5.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn scale_reproduces_label_proportions() {
        let s = LabelScale::new(PUBLISHED);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 5];
        let n = 200_000;
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            counts[crate::round_half_away(s.to_scale(z)) as usize - 1] += 1;
        }
        for (c, p) in counts.iter().zip(PUBLISHED) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.005, "{counts:?}");
        }
    }

    #[test]
    fn moments_match_the_bin_mixture() {
        let (m, sd) = LabelScale::new([0.2; 5]).moments();
        assert!((m - 3.0).abs() < 1e-12);
        assert!((sd - (2.0f64 + 1.0 / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn latent_has_unit_variance_without_effects() {
        let p = LatentParams { participant_effect: 0.0, video_effect: 0.0, participant_sd: 0.0, video_sd: 0.0, ar: 0.5, drift: 0.0 };
        let z = latent_z(&p, 100_000, &mut ChaCha8Rng::seed_from_u64(3));
        let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!((var - 1.0).abs() < 0.03);
        let lag1 = z.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (z.len() - 1) as f64;
        assert!((lag1 - 0.5).abs() < 0.03);
    }

    #[test]
    fn interpolation_holds_at_the_ends() {
        let v = [1.0, 3.0, 2.0];
        assert_eq!(interpolate(&v, -1.0), 1.0);
        assert_eq!(interpolate(&v, 0.5), 2.0);
        assert_eq!(interpolate(&v, 1.25), 2.75);
        assert_eq!(interpolate(&v, 9.0), 2.0);
    }
}
