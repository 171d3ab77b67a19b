use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::dataset::FoldTag;

/// Linear model `w·x + b` fitted with an L2 penalty on `w` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    pub fold: FoldTag,
}

/// Solves `(XcᵀXc + αI) w = Xcᵀ yc` on column-centered data; the intercept
/// is `ȳ − w·x̄`.
pub fn ridge_fit(rows: &[&[f64]], labels_encoded: &[f64], alpha: f64, fold: FoldTag) -> Result<RidgeModel, BaselineError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(BaselineError::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if rows.is_empty() || rows.len() != labels_encoded.len() {
        return Err(BaselineError::InvalidInput(format!("{} rows for {} labels", rows.len(), labels_encoded.len())));
    }
    let (n, p) = (rows.len(), rows[0].len());
    if rows.iter().any(|r| r.len() != p) {
        return Err(BaselineError::InvalidInput("ragged feature rows".into()));
    }
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(labels_encoded);
    let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
    let y_mean = y.mean();
    let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - x_mean[j]);
    let yc = y.add_scalar(-y_mean);

    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += alpha;
    }
    let rhs = xc.transpose() * yc;
    let w = gram.cholesky().ok_or(BaselineError::SingularSystem)?.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(BaselineError::SingularSystem);
    }
    let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Ok(RidgeModel { weights: w.iter().copied().collect(), intercept, alpha, fold })
}

pub fn ridge_predict(model: &RidgeModel, x: &[f64], fold: FoldTag) -> Result<f64, BaselineError> {
    if model.fold != fold {
        return Err(BaselineError::FoldMismatch { fitted: model.fold, requested: fold });
    }
    if x.len() != model.weights.len() {
        return Err(BaselineError::InvalidInput(format!("{} features, model has {}", x.len(), model.weights.len())));
    }
    Ok(model.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + model.intercept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TAG: FoldTag = FoldTag { split_id: 9, fold: 2 };

    fn as_refs(rows: &[Vec<f64>]) -> Vec<&[f64]> {
        rows.iter().map(Vec::as_slice).collect()
    }

    /// Gauss-Jordan elimination with partial pivoting on the augmented system.
    fn eliminate(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in 0..n {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        (0..n).map(|i| b[i] / a[i][i]).collect()
    }

    #[test]
    fn matches_independent_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (n, p) = (50, 10);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        let model = ridge_fit(&as_refs(&rows), &y, 1.0, TAG).unwrap();

        // Augmented design with an unpenalized intercept column.
        let mut a = vec![vec![0.0; p + 1]; p + 1];
        let mut b = vec![0.0; p + 1];
        for (r, &yi) in rows.iter().zip(&y) {
            let z: Vec<f64> = r.iter().copied().chain([1.0]).collect();
            for i in 0..=p {
                b[i] += z[i] * yi;
                for j in 0..=p {
                    a[i][j] += z[i] * z[j];
                }
            }
        }
        for (i, row) in a.iter_mut().enumerate().take(p) {
            row[i] += 1.0;
        }
        let sol = eliminate(a, b);
        for j in 0..p {
            assert!((sol[j] - model.weights[j]).abs() < 1e-8);
        }
        assert!((sol[p] - model.intercept).abs() < 1e-8);
    }

    #[test]
    fn optimality_condition_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..4.0)).collect();
        let alpha = 0.7;
        let m = ridge_fit(&as_refs(&rows), &y, alpha, TAG).unwrap();
        let means: Vec<f64> = (0..5).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / 30.0).collect();
        let y_mean = y.iter().sum::<f64>() / 30.0;
        for j in 0..5 {
            let mut g = alpha * m.weights[j];
            for (r, yi) in rows.iter().zip(&y) {
                let fit: f64 = (0..5).map(|k| (r[k] - means[k]) * m.weights[k]).sum();
                g += (r[j] - means[j]) * (fit - (yi - y_mean));
            }
            assert!(g.abs() < 1e-8, "gradient {g}");
        }
    }

    #[test]
    fn shrinkage_is_monotone_in_alpha() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 5) as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| (i % 5) as f64).collect();
        let slopes: Vec<f64> = [10.0, 1.0, 0.1, 1e-4].iter().map(|&a| ridge_fit(&as_refs(&rows), &y, a, TAG).unwrap().weights[0]).collect();
        assert!(slopes.windows(2).all(|w| w[0] < w[1]));
        assert!(slopes.iter().all(|&s| s < 1.0));
        assert!(1.0 - slopes[3] < 1e-4);
    }

    #[test]
    fn zero_design_predicts_the_label_mean() {
        let rows = vec![vec![0.0; 3]; 4];
        let m = ridge_fit(&as_refs(&rows), &[0.0, 1.0, 2.0, 4.0], 1.0, TAG).unwrap();
        assert_eq!(m.weights, vec![0.0; 3]);
        assert_eq!(m.intercept, 1.75);
        assert_eq!(ridge_predict(&m, &[5.0, 1.0, 2.0], TAG).unwrap(), 1.75);
    }

    #[test]
    fn rejects_other_folds_and_bad_input() {
        let rows = vec![vec![1.0], vec![2.0]];
        let m = ridge_fit(&as_refs(&rows), &[0.0, 1.0], 1.0, TAG).unwrap();
        assert!(matches!(ridge_predict(&m, &[1.0], FoldTag { split_id: 9, fold: 0 }), Err(BaselineError::FoldMismatch { .. })));
        assert!(ridge_fit(&as_refs(&rows), &[0.0], 1.0, TAG).is_err());
        assert!(ridge_fit(&as_refs(&rows), &[0.0, 1.0], 0.0, TAG).is_err());
    }
}
