use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, CONTEXT_DIM};
use crate::dataset::ChannelSpec;

/// One modality branch: which tensor rows it reads and which mask bit gates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalitySlot {
    pub key: String,
    pub channels: Vec<usize>,
    /// Index into `WindowSample::modality_mask`.
    pub mask_index: usize,
    /// Inactive slots are treated as permanently unavailable.
    pub active: bool,
}

/// Shapes of the network. Each modality encoder is conv(k, s) → ReLU →
/// conv(k, s) → ReLU → global average pool → linear(embed_dim).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_len: usize,
    pub embed_dim: usize,
    pub conv_channels: [usize; 2],
    pub kernel: usize,
    pub stride: usize,
    pub epsilon: f64,
    pub modalities: Vec<ModalitySlot>,
    /// Hash of the channel spec the slots were derived from.
    pub channel_spec_hash: String,
}

impl Architecture {
    pub fn for_spec(spec: &ChannelSpec, input_len: usize, embed_dim: usize, conv_channels: [usize; 2], kernel: usize, stride: usize, epsilon: f64) -> Self {
        let modalities = spec
            .modalities
            .iter()
            .enumerate()
            .map(|(i, g)| ModalitySlot { key: g.key.clone(), channels: g.channels.clone(), mask_index: i, active: true })
            .collect();
        Architecture { input_len, embed_dim, conv_channels, kernel, stride, epsilon, modalities, channel_spec_hash: spec.hash() }
    }

    /// Restricts the network to the given modality slots.
    pub fn with_active(mut self, active: &[usize]) -> Self {
        for (m, slot) in self.modalities.iter_mut().enumerate() {
            slot.active = active.contains(&m);
        }
        self
    }

    pub fn conv1_len(&self) -> usize {
        conv_out_len(self.input_len, self.kernel, self.stride)
    }

    pub fn conv2_len(&self) -> usize {
        conv_out_len(self.conv1_len(), self.kernel, self.stride)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |r: &str| Err(ModelError::InvalidConfig(r.to_string()));
        if self.embed_dim == 0 || self.conv_channels.contains(&0) || self.kernel == 0 || self.stride == 0 {
            return bad("dimensions must be positive");
        }
        if self.input_len < self.kernel || self.conv1_len() < self.kernel {
            return bad("input too short for two convolutions");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.modalities.is_empty() || self.modalities.iter().any(|m| m.channels.is_empty()) {
            return bad("every modality needs at least one channel");
        }
        Ok(())
    }
}

fn conv_out_len(n: usize, k: usize, s: usize) -> usize {
    if n < k {
        0
    } else {
        (n - k) / s + 1
    }
}

/// Parameter ranges of one modality encoder inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayout {
    pub in_channels: usize,
    pub conv1_w: Range<usize>,
    pub conv1_b: Range<usize>,
    pub conv2_w: Range<usize>,
    pub conv2_b: Range<usize>,
    pub lin_w: Range<usize>,
    pub lin_b: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateLayout {
    pub w: Range<usize>,
    pub b: Range<usize>,
}

/// Where every parameter block lives in the flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub encoders: Vec<EncoderLayout>,
    pub context_w: Range<usize>,
    pub context_b: Range<usize>,
    pub gates: Vec<GateLayout>,
    pub head_w: Range<usize>,
    pub head_b: Range<usize>,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(arch: &Architecture) -> Self {
        let mut next = 0;
        let mut take = |n: usize| {
            let r = next..next + n;
            next += n;
            r
        };
        let [f1, f2] = arch.conv_channels;
        let (k, d) = (arch.kernel, arch.embed_dim);
        let encoders = arch
            .modalities
            .iter()
            .map(|slot| {
                let c = slot.channels.len();
                EncoderLayout {
                    in_channels: c,
                    conv1_w: take(f1 * c * k),
                    conv1_b: take(f1),
                    conv2_w: take(f2 * f1 * k),
                    conv2_b: take(f2),
                    lin_w: take(d * f2),
                    lin_b: take(d),
                }
            })
            .collect();
        let context_w = take(CONTEXT_DIM * CONTEXT_DIM);
        let context_b = take(CONTEXT_DIM);
        let gates = arch.modalities.iter().map(|_| GateLayout { w: take(d + CONTEXT_DIM), b: take(1) }).collect();
        let head_w = take(d + CONTEXT_DIM);
        let head_b = take(1);
        ParamLayout { encoders, context_w, context_b, gates, head_w, head_b, total: next }
    }

    /// Named blocks with their fan-in, for initialization and reporting.
    pub fn blocks(&self, arch: &Architecture) -> Vec<(String, Range<usize>, usize)> {
        let [f1, _] = arch.conv_channels;
        let (k, d) = (arch.kernel, arch.embed_dim);
        let mut out = Vec::new();
        for (slot, e) in arch.modalities.iter().zip(&self.encoders) {
            let fan1 = e.in_channels * k;
            out.push((format!("{}.conv1_w", slot.key), e.conv1_w.clone(), fan1));
            out.push((format!("{}.conv1_b", slot.key), e.conv1_b.clone(), fan1));
            out.push((format!("{}.conv2_w", slot.key), e.conv2_w.clone(), f1 * k));
            out.push((format!("{}.conv2_b", slot.key), e.conv2_b.clone(), f1 * k));
            out.push((format!("{}.lin_w", slot.key), e.lin_w.clone(), arch.conv_channels[1]));
            out.push((format!("{}.lin_b", slot.key), e.lin_b.clone(), arch.conv_channels[1]));
        }
        out.push(("context_w".into(), self.context_w.clone(), CONTEXT_DIM));
        out.push(("context_b".into(), self.context_b.clone(), CONTEXT_DIM));
        for (slot, g) in arch.modalities.iter().zip(&self.gates) {
            out.push((format!("{}.gate_w", slot.key), g.w.clone(), d + CONTEXT_DIM));
            out.push((format!("{}.gate_b", slot.key), g.b.clone(), d + CONTEXT_DIM));
        }
        out.push(("head_w".into(), self.head_w.clone(), d + CONTEXT_DIM));
        out.push(("head_b".into(), self.head_b.clone(), d + CONTEXT_DIM));
        out
    }
}

/// Uniform `±1/sqrt(fan_in)` initialization from a seeded stream.
pub(crate) fn init_params(arch: &Architecture, layout: &ParamLayout, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; layout.total];
    for (_, range, fan_in) in layout.blocks(arch) {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for p in &mut params[range] {
            *p = rng.random_range(-bound..bound);
        }
    }
    params
}
