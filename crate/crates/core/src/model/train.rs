use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::EncoderCache;
use super::{Architecture, GatedFusionModel, ModelError};
use crate::dataset::{ChannelSpec, WindowSample};

/// Optimizer and architecture settings for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    pub validation_fraction: f64,
    pub embed_dim: usize,
    pub conv_channels: [usize; 2],
    pub kernel: usize,
    pub stride: usize,
    pub epsilon: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 300,
            batch_size: 32,
            seed: 0,
            patience: 30,
            validation_fraction: 0.2,
            embed_dim: 32,
            conv_channels: [8, 8],
            kernel: 9,
            stride: 4,
            epsilon: 1e-8,
            beta1: 0.9,
            beta2: 0.999,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |r: &str| Err(ModelError::InvalidConfig(r.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 || self.patience == 0 {
            return bad("batch size and patience must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment decays must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn architecture(&self, spec: &ChannelSpec, input_len: usize) -> Architecture {
        Architecture::for_spec(spec, input_len, self.embed_dim, self.conv_channels, self.kernel, self.stride, self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
    pub n_train: usize,
    pub n_validation: usize,
}

/// Gate values of one training window, indexed like the training input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowGates {
    pub index: usize,
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GatedFusionModel,
    pub log: TrainingLog,
    pub gates: Vec<WindowGates>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            params[i] -= cfg.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + EPS);
        }
    }
}

fn mean_abs_error(model: &GatedFusionModel, windows: &[&WindowSample]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for w in windows {
        total += (model.predict(w)? - w.encoded_label()).abs();
    }
    Ok(total / windows.len().max(1) as f64)
}

/// Seeded held-out split. Whole participants are held out until the
/// requested fraction of windows is reached, so early stopping rewards
/// generalization to unseen people; with a single participant the split
/// falls back to individual windows.
fn validation_split(windows: &[&WindowSample], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    if windows.len() < 2 {
        return (Vec::new(), (0..windows.len()).collect());
    }
    let target = ((windows.len() as f64 * fraction).round() as usize).clamp(1, windows.len() - 1);
    let mut people: Vec<&str> = windows.iter().map(|w| w.participant_id.as_str()).collect();
    people.sort_unstable();
    people.dedup();
    if people.len() < 2 {
        let mut order: Vec<usize> = (0..windows.len()).collect();
        order.shuffle(rng);
        let train = order.split_off(target);
        return (order, train);
    }
    people.shuffle(rng);
    let mut held = Vec::new();
    let mut count = 0;
    for p in &people[..people.len() - 1] {
        if count >= target {
            break;
        }
        held.push(*p);
        count += windows.iter().filter(|w| w.participant_id == *p).count();
    }
    (0..windows.len()).partition(|&i| held.contains(&windows[i].participant_id.as_str()))
}

/// Mini-batch Adam on the L1 loss with early stopping on held-out
/// participants. The head bias is reset to the median training label before
/// the first epoch. Returns the best-validation parameters.
pub fn train(model: &GatedFusionModel, windows: &[&WindowSample], config: &TrainConfig) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    if windows.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (val_idx, train_idx) = validation_split(windows, config.validation_fraction, &mut rng);
    let n_val = val_idx.len();
    let train_set: Vec<&WindowSample> = train_idx.iter().map(|&i| windows[i]).collect();
    // Without a held-out part the training loss drives model selection.
    let val_set: Vec<&WindowSample> = if n_val == 0 { train_set.clone() } else { val_idx.iter().map(|&i| windows[i]).collect() };

    let mut current = model.clone();
    if config.epochs > 0 {
        // Start from the L1-optimal constant so that uninformative inputs leave
        // the prediction at the training-label median.
        let mut labels: Vec<f64> = train_set.iter().map(|w| w.encoded_label()).collect();
        labels.sort_by(f64::total_cmp);
        let bias = current.layout().head_b.start;
        current.params_mut()[bias] = labels[(labels.len() - 1) / 2];
    }
    let mut best = current.clone();
    let mut log = TrainingLog { n_train: train_set.len(), n_validation: n_val, ..Default::default() };
    if config.epochs > 0 {
        log.best_validation_loss = mean_abs_error(&current, &val_set)?;
    }
    let mut adam = Adam::new(current.params().len());
    let mut caches = vec![EncoderCache::default(); current.n_modalities()];
    let mut grad = vec![0.0; current.params().len()];
    let mut batch_order: Vec<usize> = (0..train_set.len()).collect();
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        batch_order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in batch_order.chunks(config.batch_size).enumerate() {
            grad.fill(0.0);
            let scale = 1.0 / chunk.len() as f64;
            let mut batch_loss = 0.0;
            for &i in chunk {
                batch_loss += current.accumulate_gradient(train_set[i], scale, &mut caches, &mut grad)?;
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ModelError::NonFiniteLoss { epoch, batch: b });
            }
            epoch_loss += batch_loss;
            adam.step(current.params_mut(), &grad, config);
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let validation_loss = mean_abs_error(&current, &val_set)?;
        if !validation_loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch, batch: 0 });
        }
        log.epochs.push(EpochLog { epoch, train_loss, validation_loss });
        if validation_loss < log.best_validation_loss {
            log.best_validation_loss = validation_loss;
            log.best_epoch = epoch;
            best = current.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                log.stopped_early = epoch < config.epochs;
                break;
            }
        }
    }

    let mut gates = Vec::with_capacity(windows.len());
    for (index, w) in windows.iter().enumerate() {
        gates.push(WindowGates { index, gammas: best.forward(w)?.gates });
    }
    Ok(TrainOutcome { model: best, log, gates })
}
