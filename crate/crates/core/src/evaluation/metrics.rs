use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::{rebin_binary, BinaryClass};
use crate::numeric::{mean, population_std, round_half_away};

/// Encoded regression output to a label: round half away from zero, clip to
/// 0..4, decode to 1..5.
pub fn round_clip(y: f64) -> Result<u8, EvalError> {
    if !y.is_finite() {
        return Err(EvalError::NonFinite(y));
    }
    Ok(round_half_away(y).clamp(0.0, 4.0) as u8 + 1)
}

fn check(preds: &[u8], labels: &[u8]) -> Result<(), EvalError> {
    if preds.len() != labels.len() {
        return Err(EvalError::LengthMismatch { predictions: preds.len(), labels: labels.len() });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(&bad) = preds.iter().chain(labels).find(|l| !(1..=5).contains(*l)) {
        return Err(EvalError::OutOfRange(bad));
    }
    Ok(())
}

pub fn mae(preds: &[u8], labels: &[u8]) -> Result<f64, EvalError> {
    check(preds, labels)?;
    let total: u32 = preds.iter().zip(labels).map(|(&p, &y)| u32::from(p.abs_diff(y))).sum();
    Ok(f64::from(total) / preds.len() as f64)
}

/// Percentage of predictions at most one step from the label.
pub fn within1(preds: &[u8], labels: &[u8]) -> Result<f64, EvalError> {
    check(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(&p, &y)| p.abs_diff(y) <= 1).count();
    Ok(100.0 * hits as f64 / preds.len() as f64)
}

fn binary_pairs(preds: &[u8], labels: &[u8]) -> Result<Vec<(BinaryClass, BinaryClass)>, EvalError> {
    check(preds, labels)?;
    Ok(preds.iter().zip(labels).map(|(&p, &y)| (rebin_binary(p).expect("checked"), rebin_binary(y).expect("checked"))).collect())
}

pub fn binary_accuracy(preds: &[u8], labels: &[u8]) -> Result<f64, EvalError> {
    let pairs = binary_pairs(preds, labels)?;
    Ok(100.0 * pairs.iter().filter(|(p, y)| p == y).count() as f64 / pairs.len() as f64)
}

/// Unweighted mean of per-class F1 over Low/High. A class that is neither
/// predicted nor present is skipped; a present class never predicted
/// correctly scores 0.
pub fn binary_macro_f1(preds: &[u8], labels: &[u8]) -> Result<f64, EvalError> {
    let pairs = binary_pairs(preds, labels)?;
    let mut scores = Vec::with_capacity(2);
    for class in [BinaryClass::Low, BinaryClass::High] {
        let tp = pairs.iter().filter(|(p, y)| *p == class && *y == class).count();
        let predicted = pairs.iter().filter(|(p, _)| *p == class).count();
        let actual = pairs.iter().filter(|(_, y)| *y == class).count();
        if predicted == 0 && actual == 0 {
            continue;
        }
        scores.push(2.0 * tp as f64 / (predicted + actual) as f64);
    }
    Ok(100.0 * mean(&scores))
}

/// The four reported metrics over one set of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub n: usize,
    pub mae: f64,
    pub within1: f64,
    pub binary_accuracy: f64,
    pub binary_macro_f1: f64,
}

pub fn compute_metrics(preds: &[u8], labels: &[u8]) -> Result<FoldMetrics, EvalError> {
    Ok(FoldMetrics {
        n: preds.len(),
        mae: mae(preds, labels)?,
        within1: within1(preds, labels)?,
        binary_accuracy: binary_accuracy(preds, labels)?,
        binary_macro_f1: binary_macro_f1(preds, labels)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub predictor: String,
    pub seed: u64,
    pub config_hash: String,
    pub modality_subset: Vec<String>,
    pub split_id: u64,
}

/// Per-fold metrics, their mean and population std across folds, and the
/// metrics of all test predictions pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metadata: RunMetadata,
    pub folds: Vec<FoldMetrics>,
    pub mean: FoldMetrics,
    pub std: FoldMetrics,
    pub pooled: FoldMetrics,
}

impl MetricsReport {
    pub fn from_folds(metadata: RunMetadata, folds: Vec<FoldMetrics>, pooled: FoldMetrics) -> Self {
        let agg = |f: fn(&[f64]) -> f64| {
            let col = |g: fn(&FoldMetrics) -> f64| f(&folds.iter().map(g).collect::<Vec<_>>());
            FoldMetrics {
                n: folds.iter().map(|m| m.n).sum::<usize>() / folds.len().max(1),
                mae: col(|m| m.mae),
                within1: col(|m| m.within1),
                binary_accuracy: col(|m| m.binary_accuracy),
                binary_macro_f1: col(|m| m.binary_macro_f1),
            }
        };
        let (mean, std) = (agg(mean), agg(population_std));
        MetricsReport { metadata, folds, mean, std, pooled }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_clip_examples() {
        assert_eq!(round_clip(1.4).unwrap(), 2);
        assert_eq!(round_clip(-3.0).unwrap(), 1);
        assert_eq!(round_clip(7.2).unwrap(), 5);
        assert_eq!(round_clip(0.5).unwrap(), 2);
        assert_eq!(round_clip(2.5).unwrap(), 4);
        assert!(matches!(round_clip(f64::NAN), Err(EvalError::NonFinite(_))));
    }

    fn published_labels() -> Vec<u8> {
        [237usize, 206, 141, 71, 60].iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i as u8 + 1, c)).collect()
    }

    #[test]
    fn perfect_predictions() {
        let y = [1, 2, 3, 4, 5, 3];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.mae, m.within1, m.binary_accuracy, m.binary_macro_f1), (0.0, 100.0, 100.0, 100.0));
    }

    #[test]
    fn constant_one_on_published_histogram() {
        let y = published_labels();
        let p = vec![1u8; y.len()];
        assert_eq!(mae(&p, &y).unwrap(), 941.0 / 715.0);
        assert_eq!(within1(&p, &y).unwrap(), 100.0 * 443.0 / 715.0);
        assert_eq!(binary_accuracy(&p, &y).unwrap(), 100.0 * 443.0 / 715.0);
        // F1_Low = 2·443/(715+443), F1_High = 0
        let f1 = binary_macro_f1(&p, &y).unwrap();
        assert!((f1 - 50.0 * 2.0 * 443.0 / 1158.0).abs() < 1e-9);
    }

    #[test]
    fn constant_two_on_published_histogram() {
        let y = published_labels();
        let p = vec![2u8; y.len()];
        assert_eq!(mae(&p, &y).unwrap(), 700.0 / 715.0);
        assert_eq!(within1(&p, &y).unwrap(), 100.0 * 584.0 / 715.0);
    }

    #[test]
    fn absent_class_is_skipped() {
        // only Low anywhere
        assert_eq!(binary_macro_f1(&[1, 2, 1], &[2, 2, 1]).unwrap(), 100.0);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(mae(&[1], &[1, 2]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(mae(&[], &[]), Err(EvalError::Empty)));
        assert!(matches!(mae(&[0], &[1]), Err(EvalError::OutOfRange(0))));
    }

    #[test]
    fn balanced_symmetric_predictions_give_equal_accuracy_and_f1() {
        let y = [1, 1, 4, 4];
        let p = [1, 4, 4, 1];
        assert_eq!(binary_accuracy(&p, &y).unwrap(), binary_macro_f1(&p, &y).unwrap());
    }

    #[test]
    fn report_aggregates_with_population_std() {
        let f = |mae| FoldMetrics { n: 10, mae, within1: 50.0, binary_accuracy: 60.0, binary_macro_f1: 40.0 };
        let meta = RunMetadata { predictor: "x".into(), seed: 0, config_hash: String::new(), modality_subset: vec![], split_id: 0 };
        let r = MetricsReport::from_folds(meta, vec![f(1.0), f(3.0)], f(2.0));
        assert_eq!(r.mean.mae, 2.0);
        assert_eq!(r.std.mae, 1.0);
        assert_eq!(r.std.within1, 0.0);
    }

    fn pairs() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
        (1usize..60).prop_flat_map(|n| (prop::collection::vec(1u8..=5, n), prop::collection::vec(1u8..=5, n)))
    }

    proptest! {
        #[test]
        fn metric_ranges_and_order_invariance((p, y) in pairs(), seed in any::<u64>()) {
            let m = compute_metrics(&p, &y).unwrap();
            prop_assert!(m.mae >= 0.0 && m.mae <= 4.0);
            for v in [m.within1, m.binary_accuracy, m.binary_macro_f1] {
                prop_assert!((0.0..=100.0).contains(&v));
            }
            let exact = 100.0 * p.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / p.len() as f64;
            prop_assert!(m.within1 >= exact);

            let mut idx: Vec<usize> = (0..p.len()).collect();
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let pp: Vec<u8> = idx.iter().map(|&i| p[i]).collect();
            let yy: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
            let m2 = compute_metrics(&pp, &yy).unwrap();
            prop_assert_eq!(m.mae.to_bits(), m2.mae.to_bits());
            prop_assert_eq!(m.within1, m2.within1);
            prop_assert_eq!(m.binary_macro_f1, m2.binary_macro_f1);
        }
    }
}
