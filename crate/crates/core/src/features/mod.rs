//! Native-rate statistical window features for the linear baselines.
//!
//! Each sensor channel contributes eight summaries (mean, std, excess
//! kurtosis, min, max, IQR, first-difference std, end-to-end slope); the
//! video-progress scalar is appended once.
//!
//! Covariance, up to a relative rounding error of 1e-9: shifting a sequence
//! by `c` shifts mean, min and max by `c` and leaves the other five
//! unchanged; scaling by `s > 0` scales every feature except kurtosis by `s`
//! and leaves kurtosis unchanged.

mod matrix;
mod scaler;

pub use matrix::{featurize_windows, window_features, FeatureMatrix};
pub use scaler::{robust_apply, robust_fit, RobustScaler, IQR_FLOOR, ROBUST_CLIP};

use crate::dataset::{DatasetError, FoldTag};
use crate::numeric::percentile_sorted;

pub const FEATURE_NAMES: [&str; 8] = ["mean", "std", "kurtosis", "min", "max", "iqr", "diff_std", "slope"];
pub const SANITIZE_LIMIT: f64 = 1e6;
const KURTOSIS_EPS: f64 = 1e-24;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("transform fitted for {fitted:?} applied to {requested:?}")]
    FoldMismatch { fitted: FoldTag, requested: FoldTag },
    #[error("feature matrix: {0}")]
    Format(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Eight summaries of one channel's native samples. Non-finite samples are
/// dropped first; empty input gives zeros, a single sample `x` gives
/// `[x, 0, 0, x, x, 0, 0, 0]`.
pub fn feature_vector(samples: &[f64]) -> [f64; 8] {
    let x: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    let n = x.len();
    if n == 0 {
        return [0.0; 8];
    }
    if n == 1 {
        return [x[0], 0.0, 0.0, x[0], x[0], 0.0, 0.0, 0.0];
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in &x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m4 /= nf;
    let kurtosis = if m2 * m2 < KURTOSIS_EPS { 0.0 } else { m4 / (m2 * m2) - 3.0 };
    let (min, max) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);
    let iqr = percentile_sorted(&sorted, 0.75) - percentile_sorted(&sorted, 0.25);

    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let diff_std = crate::numeric::population_std(&diffs);
    let slope = (x[n - 1] - x[0]) / (nf - 1.0);

    [mean, m2.sqrt(), kurtosis, min, max, iqr, diff_std, slope]
}

/// Non-finite entries become 0, then everything is clipped to ±1e6.
pub fn sanitize(values: &mut [f64]) {
    for v in values {
        *v = if v.is_finite() { v.clamp(-SANITIZE_LIMIT, SANITIZE_LIMIT) } else { 0.0 };
    }
}
