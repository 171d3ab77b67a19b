use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, round_clip, MetricsReport, RunMetadata};
use super::EvalError;
use crate::dataset::{FoldSplit, FoldTag, WindowSample};

/// Window metadata needed to split and score, independent of the inputs a
/// predictor consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCorpus {
    pub participants: Vec<String>,
    pub sessions: Vec<String>,
    pub probe_indices: Vec<usize>,
    pub labels: Vec<u8>,
}

impl CvCorpus {
    pub fn from_windows(windows: &[WindowSample]) -> Self {
        CvCorpus {
            participants: windows.iter().map(|w| w.participant_id.clone()).collect(),
            sessions: windows.iter().map(|w| w.session_id.clone()).collect(),
            probe_indices: windows.iter().map(|w| w.probe_index).collect(),
            labels: windows.iter().map(|w| w.label).collect(),
        }
    }

    /// Corpus of bare labels, one pseudo-participant per entry of `participants`.
    pub fn from_labels(participants: Vec<String>, labels: Vec<u8>) -> Self {
        let n = labels.len();
        CvCorpus { sessions: participants.clone(), participants, probe_indices: (0..n).collect(), labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldContext {
    pub fold: usize,
    pub tag: FoldTag,
    pub seed: u64,
}

/// Builds and fits a fresh predictor on the training indices of one fold and
/// returns encoded (0–4 scale) predictions for the test indices, in order.
pub trait PredictorFactory: Sync {
    fn name(&self) -> String;
    fn fit_predict(&self, ctx: &FoldContext, corpus: &CvCorpus, train: &[usize], test: &[usize]) -> Result<Vec<f64>, EvalError>;
}

/// Per-fold seed derived from the run seed.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub window_id: usize,
    pub fold: usize,
    pub participant_id: String,
    pub session_id: String,
    pub probe_index: usize,
    pub label: u8,
    pub raw: f64,
    pub predicted: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: MetricsReport,
    /// Test predictions of every fold, ordered by window id.
    pub predictions: Vec<Prediction>,
}

fn split(corpus: &CvCorpus, folds: &FoldSplit, fold: usize) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..corpus.len()).partition(|&i| folds.is_test(fold, &corpus.participants[i]));
    let test_set: BTreeSet<&str> = test.iter().map(|&i| corpus.participants[i].as_str()).collect();
    if let Some(&i) = train.iter().find(|&&i| test_set.contains(corpus.participants[i].as_str())) {
        return Err(EvalError::ParticipantLeak { fold, participant: corpus.participants[i].clone() });
    }
    if test.is_empty() || train.is_empty() {
        return Err(EvalError::Fold { fold, source: Box::new(EvalError::Empty) });
    }
    Ok((train, test))
}

/// Participant-grouped cross-validation. Folds run in parallel; the report is
/// assembled in fold order.
pub fn run_cv(
    corpus: &CvCorpus,
    folds: &FoldSplit,
    factory: &dyn PredictorFactory,
    seed: u64,
    mut metadata: RunMetadata,
) -> Result<CvOutcome, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::Empty);
    }
    // Every window must be tested exactly once.
    for p in corpus.participants.iter().collect::<BTreeSet<_>>() {
        let n = (0..folds.k()).filter(|&f| folds.is_test(f, p)).count();
        if n != 1 {
            return Err(EvalError::InvalidSplit(format!("participant {p} is in {n} test groups")));
        }
    }
    let per_fold: Vec<Result<Vec<Prediction>, EvalError>> = (0..folds.k())
        .into_par_iter()
        .map(|fold| {
            let annotate = |e: EvalError| match e {
                e @ (EvalError::Fold { .. } | EvalError::ParticipantLeak { .. }) => e,
                e => EvalError::Fold { fold, source: Box::new(e) },
            };
            let (train, test) = split(corpus, folds, fold).map_err(annotate)?;
            let ctx = FoldContext { fold, tag: folds.tag(fold), seed: fold_seed(seed, fold) };
            let raw = factory.fit_predict(&ctx, corpus, &train, &test).map_err(annotate)?;
            if raw.len() != test.len() {
                return Err(annotate(EvalError::LengthMismatch { predictions: raw.len(), labels: test.len() }));
            }
            test.iter()
                .zip(raw)
                .map(|(&i, r)| {
                    Ok(Prediction {
                        window_id: i,
                        fold,
                        participant_id: corpus.participants[i].clone(),
                        session_id: corpus.sessions[i].clone(),
                        probe_index: corpus.probe_indices[i],
                        label: corpus.labels[i],
                        raw: r,
                        predicted: round_clip(r).map_err(annotate)?,
                    })
                })
                .collect()
        })
        .collect();

    let mut fold_metrics = Vec::with_capacity(folds.k());
    let mut predictions = Vec::with_capacity(corpus.len());
    for preds in per_fold {
        let preds = preds?;
        let p: Vec<u8> = preds.iter().map(|p| p.predicted).collect();
        let y: Vec<u8> = preds.iter().map(|p| p.label).collect();
        fold_metrics.push(compute_metrics(&p, &y)?);
        predictions.extend(preds);
    }
    predictions.sort_by_key(|p| p.window_id);
    let p: Vec<u8> = predictions.iter().map(|p| p.predicted).collect();
    let y: Vec<u8> = predictions.iter().map(|p| p.label).collect();
    let pooled = compute_metrics(&p, &y)?;
    metadata.seed = seed;
    metadata.split_id = folds.split_id();
    if metadata.predictor.is_empty() {
        metadata.predictor = factory.name();
    }
    Ok(CvOutcome { report: MetricsReport::from_folds(metadata, fold_metrics, pooled), predictions })
}
