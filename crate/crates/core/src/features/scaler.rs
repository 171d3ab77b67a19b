use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::dataset::FoldTag;
use crate::numeric::percentile_sorted;

pub const IQR_FLOOR: f64 = 1e-9;
pub const ROBUST_CLIP: f64 = 10.0;

/// Per-feature median / IQR fitted on one training fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustScaler {
    pub median: Vec<f64>,
    pub iqr: Vec<f64>,
    pub fold: FoldTag,
}

pub fn robust_fit(train: &[&[f64]], fold: FoldTag) -> Result<RobustScaler, FeatureError> {
    let width = train.first().ok_or(FeatureError::EmptyTrainingSet)?.len();
    let mut median = Vec::with_capacity(width);
    let mut iqr = Vec::with_capacity(width);
    let mut column = Vec::with_capacity(train.len());
    for j in 0..width {
        column.clear();
        column.extend(train.iter().map(|row| row[j]));
        column.sort_by(f64::total_cmp);
        median.push(percentile_sorted(&column, 0.5));
        iqr.push((percentile_sorted(&column, 0.75) - percentile_sorted(&column, 0.25)).max(IQR_FLOOR));
    }
    Ok(RobustScaler { median, iqr, fold })
}

/// `(x - median) / IQR`, clipped to ±10.
pub fn robust_apply(scaler: &RobustScaler, row: &[f64], fold: FoldTag) -> Result<Vec<f64>, FeatureError> {
    if scaler.fold != fold {
        return Err(FeatureError::FoldMismatch { fitted: scaler.fold, requested: fold });
    }
    if row.len() != scaler.median.len() {
        return Err(FeatureError::Format(format!("row has {} features, scaler {}", row.len(), scaler.median.len())));
    }
    Ok(row
        .iter()
        .zip(scaler.median.iter().zip(&scaler.iqr))
        .map(|(x, (m, q))| ((x - m) / q).clamp(-ROBUST_CLIP, ROBUST_CLIP))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAG: FoldTag = FoldTag { split_id: 3, fold: 1 };

    #[test]
    fn scales_by_median_and_iqr() {
        // median 5, IQR 2
        let rows: Vec<Vec<f64>> = [3.0, 4.0, 5.0, 6.0, 7.0].iter().map(|&v| vec![v]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = robust_fit(&refs, TAG).unwrap();
        assert_eq!(s.median, vec![5.0]);
        assert_eq!(s.iqr, vec![2.0]);
        assert_eq!(robust_apply(&s, &[9.0], TAG).unwrap(), vec![2.0]);
        assert_eq!(robust_apply(&s, &[105.0], TAG).unwrap(), vec![10.0]);
    }

    #[test]
    fn constant_feature_is_floored() {
        let rows = vec![vec![4.0]; 6];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = robust_fit(&refs, TAG).unwrap();
        assert_eq!(s.iqr, vec![IQR_FLOOR]);
        assert_eq!(robust_apply(&s, &[4.0], TAG).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_foreign_fold_and_empty_fit() {
        let rows = vec![vec![1.0], vec![2.0]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = robust_fit(&refs, TAG).unwrap();
        assert!(matches!(robust_apply(&s, &[1.0], FoldTag { split_id: 3, fold: 0 }), Err(FeatureError::FoldMismatch { .. })));
        assert!(matches!(robust_fit(&[], TAG), Err(FeatureError::EmptyTrainingSet)));
    }

    proptest! {
        #[test]
        fn output_is_clipped(train in prop::collection::vec(-1e6f64..1e6, 2..40), x in -1e6f64..1e6) {
            let rows: Vec<Vec<f64>> = train.iter().map(|&v| vec![v]).collect();
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let s = robust_fit(&refs, TAG).unwrap();
            let y = robust_apply(&s, &[x], TAG).unwrap()[0];
            prop_assert!((-10.0..=10.0).contains(&y));
        }
    }
}
