use serde::{Deserialize, Serialize};

use super::{ChannelSpec, DatasetError, WindowSample};

pub const STD_FLOOR: f64 = 1e-6;

/// Identifies the training fold a fitted transform belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FoldTag {
    pub split_id: u64,
    pub fold: usize,
}

impl FoldTag {
    /// Tag for transforms fitted on the whole corpus, outside cross-validation.
    pub const FULL_CORPUS: FoldTag = FoldTag { split_id: 0, fold: usize::MAX };
}

/// Per-channel mean and population standard deviation pooled over training
/// windows and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub metadata_channel: usize,
    pub fold: FoldTag,
}

pub fn fit_channel_stats(train: &[&WindowSample], spec: &ChannelSpec, fold: FoldTag) -> Result<ChannelStats, DatasetError> {
    let first = train.first().ok_or(DatasetError::EmptyTrainingSet)?;
    let (n_channels, n_samples) = (first.n_channels, first.n_samples);
    let count = (train.len() * n_samples) as f64;
    let mut mean = vec![0.0; n_channels];
    let mut std = vec![1.0; n_channels];
    for c in spec.sensor_channels() {
        let sum: f64 = train.iter().map(|w| w.row(c).iter().map(|&v| f64::from(v)).sum::<f64>()).sum();
        let mu = sum / count;
        let ss: f64 = train
            .iter()
            .map(|w| w.row(c).iter().map(|&v| (f64::from(v) - mu).powi(2)).sum::<f64>())
            .sum();
        mean[c] = mu;
        std[c] = (ss / count).sqrt().max(STD_FLOOR);
    }
    Ok(ChannelStats { mean, std, metadata_channel: spec.metadata_channel, fold })
}

impl ChannelStats {
    pub fn ensure_fold(&self, fold: FoldTag) -> Result<(), DatasetError> {
        if self.fold == fold {
            Ok(())
        } else {
            Err(DatasetError::FoldMismatch { fitted: self.fold, requested: fold })
        }
    }
}

/// Z-scores every sensor row of an available modality; the metadata row and
/// the all-zero rows of masked modalities are left as they are.
pub fn standardize(window: &WindowSample, stats: &ChannelStats, spec: &ChannelSpec, fold: FoldTag) -> Result<WindowSample, DatasetError> {
    stats.ensure_fold(fold)?;
    let mut out = window.clone();
    for (m, group) in spec.modalities.iter().enumerate() {
        if !window.modality_mask[m] {
            continue;
        }
        for &c in &group.channels {
            let (mu, sd) = (stats.mean[c], stats.std[c]);
            for v in out.row_mut(c) {
                *v = ((f64::from(*v) - mu) / sd) as f32;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::WindowSpan;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn window(spec: &ChannelSpec, fill: impl Fn(usize, usize) -> f32) -> WindowSample {
        let n = 2200;
        let mut tensor = vec![0f32; spec.n_channels() * n];
        for c in 0..spec.n_channels() {
            for t in 0..n {
                tensor[c * n + t] = if c == spec.metadata_channel { 0.5 } else { fill(c, t) };
            }
        }
        WindowSample {
            participant_id: "p".into(),
            session_id: "s".into(),
            video_id: "v".into(),
            probe_index: 0,
            span: WindowSpan::contiguous(0.0, 44_000.0),
            n_channels: spec.n_channels(),
            n_samples: n,
            tensor,
            modality_mask: vec![true; spec.n_modalities()],
            video_progress: 0.5,
            label: 3,
        }
    }

    const TAG: FoldTag = FoldTag { split_id: 1, fold: 0 };

    #[test]
    fn constant_channel_gets_floored_std() {
        let spec = ChannelSpec::canonical();
        let w = window(&spec, |_, _| 3.0);
        let stats = fit_channel_stats(&[&w], &spec, TAG).unwrap();
        assert_eq!(stats.mean[0], 3.0);
        assert_eq!(stats.std[0], STD_FLOOR);
        let z = standardize(&w, &stats, &spec, TAG).unwrap();
        assert!(z.row(0).iter().all(|&v| v == 0.0));
        assert!(z.row(27).iter().all(|&v| v == 0.5));
    }

    #[test]
    fn two_point_distribution_has_unit_std() {
        let spec = ChannelSpec::canonical();
        let w = window(&spec, |_, t| if t < 1100 { 0.0 } else { 2.0 });
        let stats = fit_channel_stats(&[&w], &spec, TAG).unwrap();
        assert_eq!(stats.mean[4], 1.0);
        assert_eq!(stats.std[4], 1.0);
    }

    #[test]
    fn pooled_stats_match_flat_recompute_and_standardize_is_elementwise() {
        let spec = ChannelSpec::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let windows: Vec<WindowSample> = (0..100)
            .map(|_| {
                let vals: Vec<f32> = (0..27 * 2200).map(|_| rng.random_range(-3.0f32..7.0)).collect();
                window(&spec, |c, t| vals[c * 2200 + t])
            })
            .collect();
        let refs: Vec<&WindowSample> = windows.iter().collect();
        let stats = fit_channel_stats(&refs, &spec, TAG).unwrap();
        for c in [0usize, 13, 26] {
            let flat: Vec<f64> = windows.iter().flat_map(|w| w.row(c).iter().map(|&v| f64::from(v))).collect();
            let mu = flat.iter().sum::<f64>() / flat.len() as f64;
            let sd = (flat.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / flat.len() as f64).sqrt();
            assert!((stats.mean[c] - mu).abs() < 1e-9);
            assert!((stats.std[c] - sd).abs() < 1e-9);
        }
        let z = standardize(&windows[7], &stats, &spec, TAG).unwrap();
        for c in [0usize, 20] {
            for t in (0..2200).step_by(97) {
                let direct = ((f64::from(windows[7].row(c)[t]) - stats.mean[c]) / stats.std[c]) as f32;
                assert!((f64::from(z.row(c)[t]) - f64::from(direct)).abs() < 1e-12);
            }
        }
        // refitting on standardized data is a fixed point
        let zs: Vec<WindowSample> = windows.iter().map(|w| standardize(w, &stats, &spec, TAG).unwrap()).collect();
        let zr: Vec<&WindowSample> = zs.iter().collect();
        let again = fit_channel_stats(&zr, &spec, TAG).unwrap();
        for c in spec.sensor_channels() {
            assert!(again.mean[c].abs() < 1e-5);
            assert!((again.std[c] - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn stats_reject_foreign_fold() {
        let spec = ChannelSpec::canonical();
        let w = window(&spec, |_, _| 1.0);
        let stats = fit_channel_stats(&[&w], &spec, TAG).unwrap();
        let other = FoldTag { split_id: 1, fold: 2 };
        assert!(matches!(standardize(&w, &stats, &spec, other), Err(DatasetError::FoldMismatch { .. })));
        assert!(matches!(fit_channel_stats(&[], &spec, TAG), Err(DatasetError::EmptyTrainingSet)));
    }
}
