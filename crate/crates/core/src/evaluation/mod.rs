//! Cross-validation, metrics, greedy modality ablation, learning-gain
//! correlation and reports.

mod ablation;
mod cv;
mod factories;
mod gain;
mod metrics;
mod report;

pub use ablation::{greedy_backward_ablation, AblationStep, AblationTrace, CandidateResult};
pub use cv::{fold_seed, run_cv, CvCorpus, CvOutcome, FoldContext, Prediction, PredictorFactory};
pub use factories::{BaselineKind, FoldFit, FusionData, FusionFactory, RidgeFactory, SensorFreeFactory};
pub use gain::{gain_correlation, normalized_gain, pearson, read_quiz_csv, GainCorrelation, QuizRecord, VideoGain};
pub use metrics::{binary_accuracy, binary_macro_f1, compute_metrics, mae, round_clip, within1, FoldMetrics, MetricsReport, RunMetadata};
pub use report::{ablation_table, metrics_table, write_predictions_csv};

use crate::baselines::BaselineError;
use crate::dataset::DatasetError;
use crate::features::FeatureError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("non-finite prediction {0}")]
    NonFinite(f64),
    #[error("length mismatch: {predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("label {0} outside 1..5")]
    OutOfRange(u8),
    #[error("fold {fold}: participant {participant} appears in both train and test")]
    ParticipantLeak { fold: usize, participant: String },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("record excluded: pre-test score {pre} leaves no room for gain")]
    ExcludedRecord { pre: u8 },
    #[error("need at least 3 videos with defined means, got {0}")]
    InsufficientVideos(usize),
    #[error("invalid modality subset: {0}")]
    InvalidSubset(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
