//! Context-informed gated fusion network.
//!
//! Every modality has its own temporal encoder; a small context encoder maps
//! video progress to `c̃`; per-modality sigmoid gates weight the embeddings in
//! a normalized average; a linear head reads `[z; c̃]`. Gradients are derived
//! by hand and checked against finite differences in the test suite.

mod arch;
mod checkpoint;
mod network;
mod train;

pub use arch::{Architecture, EncoderLayout, GateLayout, ModalitySlot, ParamLayout};
pub use checkpoint::{read_checkpoint, write_checkpoint, write_gate_log, CheckpointHeader, GateRecord};
pub use network::{fuse, l1_loss, ForwardTrace};
pub use train::{train, EpochLog, TrainConfig, TrainOutcome, TrainingLog, WindowGates};

use serde::{Deserialize, Serialize};

use crate::dataset::ChannelSpec;

pub const CONTEXT_DIM: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `[p, sin 2πp, cos 2πp]` for video progress `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextVector(pub [f64; CONTEXT_DIM]);

impl ContextVector {
    pub fn from_progress(progress: f64) -> Self {
        let angle = std::f64::consts::TAU * progress;
        ContextVector([progress, angle.sin(), angle.cos()])
    }

    pub fn progress(&self) -> f64 {
        self.0[0]
    }
}

/// Network parameters stored as one flat vector with a fixed layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedFusionModel {
    arch: Architecture,
    layout: ParamLayout,
    params: Vec<f64>,
    seed: u64,
}

impl GatedFusionModel {
    /// Seeded uniform fan-in initialization.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self, ModelError> {
        arch.validate()?;
        let layout = ParamLayout::new(&arch);
        let params = arch::init_params(&arch, &layout, seed);
        Ok(GatedFusionModel { arch, layout, params, seed })
    }

    /// Default-shaped network for a channel spec and window length.
    pub fn for_spec(spec: &ChannelSpec, input_len: usize, config: &TrainConfig) -> Result<Self, ModelError> {
        Self::new(config.architecture(spec, input_len), config.seed)
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>, seed: u64) -> Result<Self, ModelError> {
        arch.validate()?;
        let layout = ParamLayout::new(&arch);
        if params.len() != layout.total {
            return Err(ModelError::ShapeMismatch(format!("expected {} parameters, got {}", layout.total, params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::InvalidConfig("parameters must be finite".into()));
        }
        Ok(GatedFusionModel { arch, layout, params, seed })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_modalities(&self) -> usize {
        self.arch.modalities.len()
    }

    /// Reorders modality slots (and their encoder and gate parameters) so that
    /// new slot `i` is old slot `perm[i]`.
    pub fn permute_modalities(&self, perm: &[usize]) -> Result<Self, ModelError> {
        let m = self.n_modalities();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(ModelError::ShapeMismatch("not a permutation of the modality slots".into()));
        }
        let mut arch = self.arch.clone();
        arch.modalities = perm.iter().map(|&p| self.arch.modalities[p].clone()).collect();
        let layout = ParamLayout::new(&arch);
        let mut params = self.params.clone();
        for (new, &old) in perm.iter().enumerate() {
            let (src, dst) = (&self.layout.encoders[old], &layout.encoders[new]);
            for (s, d) in [
                (&src.conv1_w, &dst.conv1_w),
                (&src.conv1_b, &dst.conv1_b),
                (&src.conv2_w, &dst.conv2_w),
                (&src.conv2_b, &dst.conv2_b),
                (&src.lin_w, &dst.lin_w),
                (&src.lin_b, &dst.lin_b),
            ] {
                params[d.clone()].copy_from_slice(&self.params[s.clone()]);
            }
            let (src, dst) = (&self.layout.gates[old], &layout.gates[new]);
            params[dst.w.clone()].copy_from_slice(&self.params[src.w.clone()]);
            params[dst.b.clone()].copy_from_slice(&self.params[src.b.clone()]);
        }
        Ok(GatedFusionModel { arch, layout, params, seed: self.seed })
    }
}
