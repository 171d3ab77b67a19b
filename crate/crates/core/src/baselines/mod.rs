//! Sensor-free reference predictors and the ridge regressor over robust-scaled
//! window features.

mod ridge;

pub use ridge::{ridge_fit, ridge_predict, RidgeModel};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::FoldTag;
use crate::numeric::round_half_away;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("label histogram is empty")]
    EmptyHistogram,
    #[error("label {0} outside 1..5")]
    OutOfRange(u8),
    #[error("ridge system is singular or ill-conditioned")]
    SingularSystem,
    #[error("invalid ridge input: {0}")]
    InvalidInput(String),
    #[error("ridge model fitted for {fitted:?} applied to {requested:?}")]
    FoldMismatch { fitted: FoldTag, requested: FoldTag },
}

/// Counts of labels 1–5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub counts: [u64; 5],
}

impl LabelHistogram {
    pub fn new(counts: [u64; 5]) -> Result<Self, BaselineError> {
        let h = LabelHistogram { counts };
        if h.total() == 0 {
            return Err(BaselineError::EmptyHistogram);
        }
        Ok(h)
    }

    pub fn from_labels(labels: &[u8]) -> Result<Self, BaselineError> {
        let mut counts = [0u64; 5];
        for &l in labels {
            if !(1..=5).contains(&l) {
                return Err(BaselineError::OutOfRange(l));
            }
            counts[usize::from(l - 1)] += 1;
        }
        Self::new(counts)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean_label(&self) -> f64 {
        let weighted: u64 = self.counts.iter().enumerate().map(|(i, &c)| (i as u64 + 1) * c).sum();
        weighted as f64 / self.total() as f64
    }

    pub fn proportions(&self) -> [f64; 5] {
        let n = self.total() as f64;
        self.counts.map(|c| c as f64 / n)
    }

    /// Labels in ascending order, each repeated by its count.
    pub fn expand(&self) -> Vec<u8> {
        (1..=5u8).flat_map(|l| std::iter::repeat_n(l, self.counts[usize::from(l - 1)] as usize)).collect()
    }
}

/// Predicts one label for every window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantPredictor {
    pub label: u8,
}

impl ConstantPredictor {
    /// Prediction on the encoded 0–4 scale.
    pub fn predict_encoded(&self) -> f64 {
        f64::from(self.label) - 1.0
    }
}

/// Rounded training-label mean (ties away from zero), clipped to 1..5.
pub fn mean_baseline(hist: &LabelHistogram) -> Result<ConstantPredictor, BaselineError> {
    if hist.total() == 0 {
        return Err(BaselineError::EmptyHistogram);
    }
    Ok(ConstantPredictor { label: round_half_away(hist.mean_label()).clamp(1.0, 5.0) as u8 })
}

/// Most frequent training label; ties go to the smaller label.
pub fn mode_baseline(hist: &LabelHistogram) -> Result<ConstantPredictor, BaselineError> {
    if hist.total() == 0 {
        return Err(BaselineError::EmptyHistogram);
    }
    let mut best = 0;
    for i in 1..5 {
        if hist.counts[i] > hist.counts[best] {
            best = i;
        }
    }
    Ok(ConstantPredictor { label: best as u8 + 1 })
}

/// Draws labels i.i.d. from the training-label distribution.
#[derive(Debug, Clone)]
pub struct RandomPredictor {
    dist: WeightedIndex<u64>,
    rng: ChaCha8Rng,
}

impl RandomPredictor {
    pub fn sample(&mut self) -> u8 {
        self.dist.sample(&mut self.rng) as u8 + 1
    }

    pub fn sample_n(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.sample()).collect()
    }
}

pub fn random_baseline(hist: &LabelHistogram, seed: u64) -> Result<RandomPredictor, BaselineError> {
    let dist = WeightedIndex::new(hist.counts).map_err(|_| BaselineError::EmptyHistogram)?;
    Ok(RandomPredictor { dist, rng: ChaCha8Rng::seed_from_u64(seed) })
}
