use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::cv::{CvCorpus, FoldContext, PredictorFactory};
use super::EvalError;
use crate::baselines::{mean_baseline, mode_baseline, random_baseline, ridge_fit, ridge_predict, LabelHistogram};
use crate::dataset::{fit_channel_stats, standardize, ChannelSpec, ChannelStats, FoldTag, WindowSample};
use crate::features::{robust_apply, robust_fit, FeatureMatrix};
use crate::model::{self, GatedFusionModel, TrainConfig, TrainingLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Mean,
    Mode,
    Random,
    Ridge,
}

impl std::str::FromStr for BaselineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mean" => Ok(BaselineKind::Mean),
            "mode" => Ok(BaselineKind::Mode),
            "random" => Ok(BaselineKind::Random),
            "ridge" => Ok(BaselineKind::Ridge),
            other => Err(format!("unknown baseline {other:?}; expected mean, mode, random or ridge")),
        }
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaselineKind::Mean => "mean",
            BaselineKind::Mode => "mode",
            BaselineKind::Random => "random",
            BaselineKind::Ridge => "ridge",
        })
    }
}

/// Mean, mode or random baseline fitted on the training-fold labels.
#[derive(Debug, Clone, Copy)]
pub struct SensorFreeFactory {
    pub kind: BaselineKind,
}

impl PredictorFactory for SensorFreeFactory {
    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn fit_predict(&self, ctx: &FoldContext, corpus: &CvCorpus, train: &[usize], test: &[usize]) -> Result<Vec<f64>, EvalError> {
        let labels: Vec<u8> = train.iter().map(|&i| corpus.labels[i]).collect();
        let hist = LabelHistogram::from_labels(&labels)?;
        let encoded = |l: u8| f64::from(l) - 1.0;
        Ok(match self.kind {
            BaselineKind::Mean => vec![mean_baseline(&hist)?.predict_encoded(); test.len()],
            BaselineKind::Mode => vec![mode_baseline(&hist)?.predict_encoded(); test.len()],
            BaselineKind::Random => random_baseline(&hist, ctx.seed)?.sample_n(test.len()).into_iter().map(encoded).collect(),
            BaselineKind::Ridge => return Err(EvalError::Format("ridge needs features; use RidgeFactory".into())),
        })
    }
}

/// Robust scaling plus ridge regression on a column subset of the feature matrix.
#[derive(Debug, Clone)]
pub struct RidgeFactory<'a> {
    pub features: &'a FeatureMatrix,
    pub columns: Vec<usize>,
    pub alpha: f64,
}

impl PredictorFactory for RidgeFactory<'_> {
    fn name(&self) -> String {
        "ridge".into()
    }

    fn fit_predict(&self, ctx: &FoldContext, corpus: &CvCorpus, train: &[usize], test: &[usize]) -> Result<Vec<f64>, EvalError> {
        if self.features.rows.len() != corpus.len() {
            return Err(EvalError::LengthMismatch { predictions: self.features.rows.len(), labels: corpus.len() });
        }
        let select = |i: usize| -> Vec<f64> { self.columns.iter().map(|&c| self.features.rows[i][c]).collect() };
        let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| select(i)).collect();
        let refs: Vec<&[f64]> = train_rows.iter().map(Vec::as_slice).collect();
        let scaler = robust_fit(&refs, ctx.tag)?;
        let scaled: Vec<Vec<f64>> = train_rows.iter().map(|r| robust_apply(&scaler, r, ctx.tag)).collect::<Result<_, _>>()?;
        let refs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let y: Vec<f64> = train.iter().map(|&i| f64::from(corpus.labels[i]) - 1.0).collect();
        let model = ridge_fit(&refs, &y, self.alpha, ctx.tag)?;
        test.iter()
            .map(|&i| {
                let x = robust_apply(&scaler, &select(i), ctx.tag)?;
                Ok(ridge_predict(&model, &x, ctx.tag)?)
            })
            .collect()
    }
}

/// Windows shared by every fusion run over one corpus. With caching on, the
/// standardized copy of the corpus is kept per fold so repeated runs (e.g.
/// ablation candidates) skip refitting channel statistics.
pub struct FusionData<'a> {
    pub windows: &'a [WindowSample],
    pub spec: &'a ChannelSpec,
    cache: Option<Mutex<HashMap<FoldTag, Arc<(ChannelStats, Vec<WindowSample>)>>>>,
}

impl<'a> FusionData<'a> {
    pub fn new(windows: &'a [WindowSample], spec: &'a ChannelSpec, cache: bool) -> Self {
        FusionData { windows, spec, cache: cache.then(|| Mutex::new(HashMap::new())) }
    }

    /// Channel stats fitted on `train` and the standardized windows at `needed`.
    fn prepared(&self, tag: FoldTag, train: &[usize], needed: &[usize]) -> Result<Arc<(ChannelStats, Vec<WindowSample>)>, EvalError> {
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.lock().expect("cache lock").get(&tag) {
                return Ok(hit.clone());
            }
        }
        let train_refs: Vec<&WindowSample> = train.iter().map(|&i| &self.windows[i]).collect();
        let stats = fit_channel_stats(&train_refs, self.spec, tag)?;
        let all: Vec<usize>;
        let idx = if self.cache.is_some() {
            all = (0..self.windows.len()).collect();
            &all
        } else {
            needed
        };
        let mut standardized = Vec::with_capacity(self.windows.len());
        for (i, w) in self.windows.iter().enumerate() {
            // Positions stay aligned with window ids; untouched entries are never read.
            standardized.push(if idx.binary_search(&i).is_ok() { standardize(w, &stats, self.spec, tag)? } else { empty_like(w) });
        }
        let prepared = Arc::new((stats, standardized));
        if let Some(cache) = &self.cache {
            cache.lock().expect("cache lock").insert(tag, prepared.clone());
        }
        Ok(prepared)
    }
}

fn empty_like(w: &WindowSample) -> WindowSample {
    WindowSample { tensor: Vec::new(), ..w.clone() }
}

/// Everything produced by training the fusion model on one fold.
#[derive(Debug, Clone)]
pub struct FoldFit {
    pub fold: usize,
    pub model: GatedFusionModel,
    pub stats: ChannelStats,
    pub log: TrainingLog,
    /// `(window_id, gammas)` for every training window.
    pub gates: Vec<(usize, Vec<f64>)>,
    pub test: Vec<usize>,
    pub predictions: Vec<f64>,
}

/// Gated fusion model trained per fold on standardized windows, restricted to
/// the `active` modality slots.
pub struct FusionFactory<'a> {
    pub data: &'a FusionData<'a>,
    pub config: TrainConfig,
    pub active: Vec<usize>,
    keep: Option<Mutex<Vec<FoldFit>>>,
}

impl<'a> FusionFactory<'a> {
    pub fn new(data: &'a FusionData<'a>, config: TrainConfig, active: Vec<usize>) -> Self {
        FusionFactory { data, config, active, keep: None }
    }

    /// Keeps every fold's model, stats and gates for later export.
    pub fn keeping_fits(mut self) -> Self {
        self.keep = Some(Mutex::new(Vec::new()));
        self
    }

    /// Fits collected so far, in fold order.
    pub fn take_fits(&self) -> Vec<FoldFit> {
        let mut fits = self.keep.as_ref().map(|k| std::mem::take(&mut *k.lock().expect("fit lock"))).unwrap_or_default();
        fits.sort_by_key(|f| f.fold);
        fits
    }

    pub fn fit_fold(&self, ctx: &FoldContext, train: &[usize], test: &[usize]) -> Result<FoldFit, EvalError> {
        if self.active.is_empty() || self.active.iter().any(|&m| m >= self.data.spec.n_modalities()) {
            return Err(EvalError::InvalidSubset(format!("{:?}", self.active)));
        }
        let mut needed: Vec<usize> = train.iter().chain(test).copied().collect();
        needed.sort_unstable();
        let prepared = self.data.prepared(ctx.tag, train, &needed)?;
        let (stats, windows) = (&prepared.0, &prepared.1);
        let n_samples = self.data.windows.first().map_or(0, |w| w.n_samples);
        let config = TrainConfig { seed: ctx.seed, ..self.config.clone() };
        let arch = config.architecture(self.data.spec, n_samples).with_active(&self.active);
        let init = GatedFusionModel::new(arch, ctx.seed)?;
        let train_refs: Vec<&WindowSample> = train.iter().map(|&i| &windows[i]).collect();
        let outcome = model::train(&init, &train_refs, &config)?;
        let predictions = test.iter().map(|&i| outcome.model.predict(&windows[i])).collect::<Result<Vec<_>, _>>()?;
        let gates = outcome.gates.into_iter().map(|g| (train[g.index], g.gammas)).collect();
        Ok(FoldFit { fold: ctx.fold, model: outcome.model, stats: stats.clone(), log: outcome.log, gates, test: test.to_vec(), predictions })
    }
}

impl PredictorFactory for FusionFactory<'_> {
    fn name(&self) -> String {
        "gated_fusion".into()
    }

    fn fit_predict(&self, ctx: &FoldContext, _corpus: &CvCorpus, train: &[usize], test: &[usize]) -> Result<Vec<f64>, EvalError> {
        let fit = self.fit_fold(ctx, train, test)?;
        let predictions = fit.predictions.clone();
        if let Some(keep) = &self.keep {
            keep.lock().expect("fit lock").push(fit);
        }
        Ok(predictions)
    }
}
