use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{run_cv, CvCorpus, PredictorFactory};
use super::metrics::{MetricsReport, RunMetadata};
use super::EvalError;
use crate::dataset::{ChannelSpec, FoldSplit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub removed: usize,
    pub mean_mae: f64,
}

/// One greedy step: the removed modality, what remains, and the report of
/// the chosen candidate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationStep {
    pub removed: usize,
    pub removed_key: String,
    pub remaining: Vec<usize>,
    pub report: MetricsReport,
    pub candidates: Vec<CandidateResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTrace {
    pub start: Vec<usize>,
    /// Report of the full starting subset, when requested.
    pub initial: Option<MetricsReport>,
    pub steps: Vec<AblationStep>,
}

impl AblationTrace {
    pub fn candidate_runs(&self) -> usize {
        self.steps.iter().map(|s| s.candidates.len()).sum()
    }

    /// Modalities in removal order, followed by the one that survived.
    pub fn removal_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = self.steps.iter().map(|s| s.removed).collect();
        if let Some(last) = self.steps.last() {
            order.extend(&last.remaining);
        }
        order
    }

    pub fn is_nested(&self) -> bool {
        let mut prev = self.start.clone();
        for s in &self.steps {
            if s.remaining.len() + 1 != prev.len() || !s.remaining.iter().all(|m| prev.contains(m)) || s.remaining.contains(&s.removed) {
                return false;
            }
            prev = s.remaining.clone();
        }
        prev.len() == 1
    }
}

/// Greedy backward selection: at each step every single-modality removal is
/// cross-validated and the one with the lowest mean fold MAE is applied (ties
/// go to the modality earlier in channel-spec order), until one remains.
#[allow(clippy::too_many_arguments)]
pub fn greedy_backward_ablation<'f, F>(
    corpus: &CvCorpus,
    folds: &FoldSplit,
    spec: &ChannelSpec,
    start: &[usize],
    seed: u64,
    evaluate_start: bool,
    metadata: &RunMetadata,
    make_factory: F,
) -> Result<AblationTrace, EvalError>
where
    F: Fn(&[usize]) -> Box<dyn PredictorFactory + 'f> + Sync,
{
    let mut current: Vec<usize> = start.to_vec();
    current.sort_unstable();
    current.dedup();
    if current.len() < 2 || current.iter().any(|&m| m >= spec.n_modalities()) {
        return Err(EvalError::InvalidSubset(format!("need at least two valid modalities, got {start:?}")));
    }
    let run = |subset: &[usize]| -> Result<MetricsReport, EvalError> {
        let meta = RunMetadata { modality_subset: subset.iter().map(|&m| spec.modalities[m].key.clone()).collect(), ..metadata.clone() };
        Ok(run_cv(corpus, folds, make_factory(subset).as_ref(), seed, meta)?.report)
    };
    let initial = if evaluate_start { Some(run(&current)?) } else { None };
    let mut trace = AblationTrace { start: current.clone(), initial, steps: Vec::new() };

    while current.len() > 1 {
        let results: Vec<Result<(usize, MetricsReport), EvalError>> = current
            .par_iter()
            .map(|&m| {
                let subset: Vec<usize> = current.iter().copied().filter(|&x| x != m).collect();
                Ok((m, run(&subset)?))
            })
            .collect();
        let results: Vec<(usize, MetricsReport)> = results.into_iter().collect::<Result<_, _>>()?;
        let mut best = 0;
        for (i, (_, r)) in results.iter().enumerate() {
            if r.mean.mae < results[best].1.mean.mae {
                best = i;
            }
        }
        let candidates = results.iter().map(|(m, r)| CandidateResult { removed: *m, mean_mae: r.mean.mae }).collect();
        let (removed, report) = results[best].clone();
        current.retain(|&x| x != removed);
        trace.steps.push(AblationStep { removed, removed_key: spec.modalities[removed].key.clone(), remaining: current.clone(), report, candidates });
    }
    Ok(trace)
}
