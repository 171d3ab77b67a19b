use super::{ContextVector, EncoderLayout, GatedFusionModel, ModelError, CONTEXT_DIM};
use crate::dataset::WindowSample;

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub context: ContextVector,
    pub context_encoded: [f64; CONTEXT_DIM],
    pub available: Vec<bool>,
    /// Unavailable modalities keep a zero embedding; their encoder is not run.
    pub embeddings: Vec<Vec<f64>>,
    pub gates: Vec<f64>,
    pub fused: Vec<f64>,
    pub output: f64,
}

/// Activations kept for the backward pass of one encoder.
#[derive(Debug, Clone, Default)]
pub(crate) struct EncoderCache {
    x: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    pooled: Vec<f64>,
}

/// `Σ γ_m h_m / (Σ γ_m + ε)`. Each sum is taken over sorted terms so the
/// result does not depend on modality order; zero-gated modalities are left
/// out entirely, so their embeddings cannot contribute even a signed zero.
pub fn fuse<E: AsRef<[f64]>>(embeddings: &[E], gates: &[f64], epsilon: f64) -> Vec<f64> {
    let d = embeddings.first().map_or(0, |h| h.as_ref().len());
    let mut terms: Vec<f64> = gates.to_vec();
    let denom = sorted_sum(&mut terms) + epsilon;
    (0..d)
        .map(|j| {
            terms.clear();
            terms.extend(embeddings.iter().zip(gates).filter(|(_, &g)| g != 0.0).map(|(h, &g)| g * h.as_ref()[j]));
            sorted_sum(&mut terms) / denom
        })
        .collect()
}

fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Mean absolute error between predictions and encoded labels.
pub fn l1_loss(predictions: &[f64], targets: &[f64]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().zip(targets).map(|(p, y)| (p - y).abs()).sum::<f64>() / predictions.len() as f64
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Valid strided convolution followed by ReLU. Layouts are channel-major;
/// weights are `[out][in][k]`.
#[allow(clippy::too_many_arguments)]
fn conv_relu(input: &[f64], c_in: usize, len_in: usize, w: &[f64], b: &[f64], k: usize, s: usize, len_out: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(b.len() * len_out, 0.0);
    for (f, o) in out.chunks_exact_mut(len_out).enumerate() {
        o.fill(b[f]);
        for c in 0..c_in {
            let wk = &w[(f * c_in + c) * k..][..k];
            let row = &input[c * len_in..(c + 1) * len_in];
            for (t, acc) in o.iter_mut().enumerate() {
                *acc += dot(wk, &row[t * s..t * s + k]);
            }
        }
        for v in o.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// Backward of a convolution given the gradient w.r.t. its pre-activation.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    c_in: usize,
    len_in: usize,
    w: &[f64],
    k: usize,
    s: usize,
    len_out: usize,
    g_pre: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    mut g_in: Option<&mut [f64]>,
) {
    for (f, g_row) in g_pre.chunks_exact(len_out).enumerate() {
        gb[f] += g_row.iter().sum::<f64>();
        for c in 0..c_in {
            let base = (f * c_in + c) * k;
            let row = &input[c * len_in..(c + 1) * len_in];
            let mut acc = [0.0; 16];
            let acc = if k <= 16 { &mut acc[..k] } else { unreachable!("kernel wider than 16") };
            for (t, &g) in g_row.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let seg = &row[t * s..t * s + k];
                for j in 0..k {
                    acc[j] += g * seg[j];
                }
                if let Some(gi) = g_in.as_deref_mut() {
                    let wk = &w[base..base + k];
                    let gseg = &mut gi[c * len_in + t * s..][..k];
                    for j in 0..k {
                        gseg[j] += g * wk[j];
                    }
                }
            }
            for j in 0..k {
                gw[base + j] += acc[j];
            }
        }
    }
}

impl GatedFusionModel {
    fn check_modality(&self, m: usize) -> Result<(), ModelError> {
        if m >= self.n_modalities() {
            return Err(ModelError::ShapeMismatch(format!("modality {m} out of range")));
        }
        Ok(())
    }

    /// Temporal embedding `h_m` of one modality's channel rows (row-major,
    /// `channels × input_len`).
    pub fn encode_modality(&self, m: usize, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_modality(m)?;
        let expected = self.arch.modalities[m].channels.len() * self.arch.input_len;
        if x.len() != expected {
            return Err(ModelError::ShapeMismatch(format!("modality {m} expects {expected} values, got {}", x.len())));
        }
        let mut cache = EncoderCache { x: x.to_vec(), ..Default::default() };
        Ok(self.encoder_forward(m, &mut cache))
    }

    fn encoder_forward(&self, m: usize, cache: &mut EncoderCache) -> Vec<f64> {
        let a = &self.arch;
        let e: &EncoderLayout = &self.layout.encoders[m];
        let p = &self.params;
        let [_, f2] = a.conv_channels;
        let (l0, l1, l2) = (a.input_len, a.conv1_len(), a.conv2_len());
        conv_relu(&cache.x, e.in_channels, l0, &p[e.conv1_w.clone()], &p[e.conv1_b.clone()], a.kernel, a.stride, l1, &mut cache.a1);
        conv_relu(&cache.a1, a.conv_channels[0], l1, &p[e.conv2_w.clone()], &p[e.conv2_b.clone()], a.kernel, a.stride, l2, &mut cache.a2);
        cache.pooled = cache.a2.chunks_exact(l2).map(|r| r.iter().sum::<f64>() / l2 as f64).collect();
        let w = &p[e.lin_w.clone()];
        let b = &p[e.lin_b.clone()];
        (0..a.embed_dim).map(|i| dot(&w[i * f2..(i + 1) * f2], &cache.pooled) + b[i]).collect()
    }

    /// `c̃ = ReLU(W c + b)`.
    pub fn encode_context(&self, c: &ContextVector) -> [f64; CONTEXT_DIM] {
        let w = &self.params[self.layout.context_w.clone()];
        let b = &self.params[self.layout.context_b.clone()];
        std::array::from_fn(|i| (dot(&w[i * CONTEXT_DIM..(i + 1) * CONTEXT_DIM], &c.0) + b[i]).max(0.0))
    }

    /// `σ(g_m([h; c̃]))`, or exactly 0 without evaluating the gate when the
    /// modality is unavailable.
    pub fn gate(&self, m: usize, h: &[f64], c_tilde: &[f64; CONTEXT_DIM], available: bool) -> Result<f64, ModelError> {
        self.check_modality(m)?;
        if h.len() != self.arch.embed_dim {
            return Err(ModelError::ShapeMismatch(format!("embedding has {} values, expected {}", h.len(), self.arch.embed_dim)));
        }
        Ok(if available { sigmoid(self.gate_logit(m, h, c_tilde)) } else { 0.0 })
    }

    fn gate_logit(&self, m: usize, h: &[f64], c_tilde: &[f64; CONTEXT_DIM]) -> f64 {
        let g = &self.layout.gates[m];
        let w = &self.params[g.w.clone()];
        let d = self.arch.embed_dim;
        dot(&w[..d], h) + dot(&w[d..], c_tilde) + self.params[g.b.start]
    }

    /// Regression head `r([z; c̃])` on the encoded 0–4 scale.
    pub fn head(&self, z: &[f64], c_tilde: &[f64; CONTEXT_DIM]) -> f64 {
        let w = &self.params[self.layout.head_w.clone()];
        let d = self.arch.embed_dim;
        dot(&w[..d], z) + dot(&w[d..], c_tilde) + self.params[self.layout.head_b.start]
    }

    /// Whether each slot takes part for this window (active and unmasked).
    pub fn availability(&self, window: &WindowSample) -> Result<Vec<bool>, ModelError> {
        self.check_window(window)?;
        Ok(self.arch.modalities.iter().map(|s| s.active && window.modality_mask[s.mask_index]).collect())
    }

    fn check_window(&self, window: &WindowSample) -> Result<(), ModelError> {
        if window.n_samples != self.arch.input_len {
            return Err(ModelError::ShapeMismatch(format!("window has {} samples, model expects {}", window.n_samples, self.arch.input_len)));
        }
        for slot in &self.arch.modalities {
            if slot.mask_index >= window.modality_mask.len() || slot.channels.iter().any(|&c| c >= window.n_channels) {
                return Err(ModelError::ShapeMismatch(format!("window lacks rows for modality {}", slot.key)));
            }
        }
        Ok(())
    }

    /// Channel rows of modality `m` as one row-major f64 buffer.
    pub fn modality_input(&self, window: &WindowSample, m: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.arch.modalities[m].channels.len() * window.n_samples);
        for &c in &self.arch.modalities[m].channels {
            x.extend(window.row(c).iter().map(|&v| f64::from(v)));
        }
        x
    }

    fn forward_cached(&self, window: &WindowSample, caches: &mut [EncoderCache]) -> Result<ForwardTrace, ModelError> {
        let available = self.availability(window)?;
        let d = self.arch.embed_dim;
        let context = ContextVector::from_progress(window.video_progress);
        let c_tilde = self.encode_context(&context);
        let mut embeddings = Vec::with_capacity(available.len());
        let mut gates = Vec::with_capacity(available.len());
        for (m, &on) in available.iter().enumerate() {
            if on {
                caches[m].x = self.modality_input(window, m);
                let h = self.encoder_forward(m, &mut caches[m]);
                gates.push(sigmoid(self.gate_logit(m, &h, &c_tilde)));
                embeddings.push(h);
            } else {
                gates.push(0.0);
                embeddings.push(vec![0.0; d]);
            }
        }
        let fused = fuse(&embeddings, &gates, self.arch.epsilon);
        let output = self.head(&fused, &c_tilde);
        Ok(ForwardTrace { context, context_encoded: c_tilde, available, embeddings, gates, fused, output })
    }

    /// Full forward pass with all intermediates.
    pub fn forward(&self, window: &WindowSample) -> Result<ForwardTrace, ModelError> {
        let mut caches = vec![EncoderCache::default(); self.n_modalities()];
        self.forward_cached(window, &mut caches)
    }

    /// Predicted engagement on the encoded 0–4 scale.
    pub fn predict(&self, window: &WindowSample) -> Result<f64, ModelError> {
        Ok(self.forward(window)?.output)
    }

    /// Mean L1 loss over a batch and its gradient w.r.t. every parameter.
    pub fn loss_and_gradient(&self, batch: &[&WindowSample]) -> Result<(f64, Vec<f64>), ModelError> {
        let mut grad = vec![0.0; self.params.len()];
        let mut caches = vec![EncoderCache::default(); self.n_modalities()];
        let mut total = 0.0;
        let scale = 1.0 / batch.len().max(1) as f64;
        for w in batch {
            total += self.accumulate_gradient(w, scale, &mut caches, &mut grad)?;
        }
        Ok((total * scale, grad))
    }

    /// Adds `scale · ∂|ŷ − y|/∂θ` into `grad`; returns `|ŷ − y|`.
    pub(crate) fn accumulate_gradient(&self, window: &WindowSample, scale: f64, caches: &mut [EncoderCache], grad: &mut [f64]) -> Result<f64, ModelError> {
        let tr = self.forward_cached(window, caches)?;
        let residual = tr.output - window.encoded_label();
        let g_out = scale * if residual > 0.0 { 1.0 } else if residual < 0.0 { -1.0 } else { 0.0 };
        if g_out == 0.0 {
            return Ok(residual.abs());
        }
        let d = self.arch.embed_dim;
        let p = &self.params;
        let c_tilde = tr.context_encoded;

        let head_w = &p[self.layout.head_w.clone()];
        for j in 0..d {
            grad[self.layout.head_w.start + j] += g_out * tr.fused[j];
        }
        for j in 0..CONTEXT_DIM {
            grad[self.layout.head_w.start + d + j] += g_out * c_tilde[j];
        }
        grad[self.layout.head_b.start] += g_out;
        let g_z: Vec<f64> = head_w[..d].iter().map(|w| g_out * w).collect();
        let mut g_ct: [f64; CONTEXT_DIM] = std::array::from_fn(|j| g_out * head_w[d + j]);

        let denom = tr.gates.iter().sum::<f64>() + self.arch.epsilon;
        for m in 0..self.n_modalities() {
            if !tr.available[m] {
                continue;
            }
            let gamma = tr.gates[m];
            let h = &tr.embeddings[m];
            let mut g_h: Vec<f64> = g_z.iter().map(|g| g * gamma / denom).collect();
            let g_gamma: f64 = (0..d).map(|j| g_z[j] * (h[j] - tr.fused[j])).sum::<f64>() / denom;
            let g_a = g_gamma * gamma * (1.0 - gamma);
            let gl = &self.layout.gates[m];
            let gw = &p[gl.w.clone()];
            for j in 0..d {
                grad[gl.w.start + j] += g_a * h[j];
                g_h[j] += g_a * gw[j];
            }
            for j in 0..CONTEXT_DIM {
                grad[gl.w.start + d + j] += g_a * c_tilde[j];
                g_ct[j] += g_a * gw[d + j];
            }
            grad[gl.b.start] += g_a;
            self.encoder_backward(m, &caches[m], &g_h, grad);
        }

        let ctx = tr.context.0;
        for i in 0..CONTEXT_DIM {
            if c_tilde[i] > 0.0 {
                for j in 0..CONTEXT_DIM {
                    grad[self.layout.context_w.start + i * CONTEXT_DIM + j] += g_ct[i] * ctx[j];
                }
                grad[self.layout.context_b.start + i] += g_ct[i];
            }
        }
        Ok(residual.abs())
    }

    fn encoder_backward(&self, m: usize, cache: &EncoderCache, g_h: &[f64], grad: &mut [f64]) {
        let a = &self.arch;
        let e = &self.layout.encoders[m];
        let p = &self.params;
        let [f1, f2] = a.conv_channels;
        let (l0, l1, l2) = (a.input_len, a.conv1_len(), a.conv2_len());

        let lin_w = &p[e.lin_w.clone()];
        let mut g_pool = vec![0.0; f2];
        for (i, &g) in g_h.iter().enumerate() {
            grad[e.lin_b.start + i] += g;
            for f in 0..f2 {
                grad[e.lin_w.start + i * f2 + f] += g * cache.pooled[f];
                g_pool[f] += g * lin_w[i * f2 + f];
            }
        }

        let mut g2 = vec![0.0; f2 * l2];
        for f in 0..f2 {
            let g = g_pool[f] / l2 as f64;
            for t in 0..l2 {
                if cache.a2[f * l2 + t] > 0.0 {
                    g2[f * l2 + t] = g;
                }
            }
        }
        let mut g1 = vec![0.0; f1 * l1];
        let (w2s, b2s) = (e.conv2_w.clone(), e.conv2_b.clone());
        let mut gw2 = vec![0.0; w2s.len()];
        let mut gb2 = vec![0.0; b2s.len()];
        conv_backward(&cache.a1, f1, l1, &p[w2s.clone()], a.kernel, a.stride, l2, &g2, &mut gw2, &mut gb2, Some(&mut g1));
        for (v, &a1) in g1.iter_mut().zip(&cache.a1) {
            if a1 <= 0.0 {
                *v = 0.0;
            }
        }
        let (w1s, b1s) = (e.conv1_w.clone(), e.conv1_b.clone());
        let mut gw1 = vec![0.0; w1s.len()];
        let mut gb1 = vec![0.0; b1s.len()];
        conv_backward(&cache.x, e.in_channels, l0, &p[w1s.clone()], a.kernel, a.stride, l1, &g1, &mut gw1, &mut gb1, None);

        for (range, g) in [(w1s, gw1), (b1s, gb1), (w2s, gw2), (b2s, gb2)] {
            for (dst, v) in grad[range].iter_mut().zip(g) {
                *dst += v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Architecture, ModalitySlot, TrainConfig};
    use super::*;
    use crate::dataset::ChannelSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_arch() -> Architecture {
        Architecture {
            input_len: 64,
            embed_dim: 4,
            conv_channels: [3, 2],
            kernel: 5,
            stride: 2,
            epsilon: 1e-8,
            modalities: vec![
                ModalitySlot { key: "a".into(), channels: vec![0, 1], mask_index: 0, active: true },
                ModalitySlot { key: "b".into(), channels: vec![2], mask_index: 1, active: true },
                ModalitySlot { key: "c".into(), channels: vec![3], mask_index: 2, active: true },
            ],
            channel_spec_hash: String::new(),
        }
    }

    fn random_window(rng: &mut ChaCha8Rng, n_channels: usize, n: usize, n_mod: usize) -> WindowSample {
        WindowSample {
            participant_id: "P".into(),
            session_id: "S".into(),
            video_id: "V".into(),
            probe_index: 0,
            span: crate::dataset::WindowSpan::contiguous(0.0, 1.0),
            n_channels,
            n_samples: n,
            tensor: (0..n_channels * n).map(|_| rng.random_range(-2.0f32..2.0)).collect(),
            modality_mask: vec![true; n_mod],
            video_progress: rng.random_range(0.0..1.0),
            label: rng.random_range(1..=5),
        }
    }

    #[test]
    fn fuse_examples() {
        let z = fuse(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5], 1e-8);
        assert!((z[0] - 0.5).abs() < 1e-7 && (z[1] - 0.5).abs() < 1e-7);
        let h = vec![0.3, -2.0, 5.0];
        let z = fuse(&[h.clone()], &[0.7], 1e-8);
        for (a, b) in z.iter().zip(&h) {
            assert!((a - b).abs() <= b.abs() * 2e-8);
        }
        assert_eq!(fuse(&[vec![4.0, 1.0], vec![2.0, 2.0]], &[0.0, 0.0], 1e-8), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_final_layer_gives_zero_embedding() {
        let mut model = GatedFusionModel::new(small_arch(), 1).unwrap();
        let e = model.layout().encoders[0].clone();
        for i in e.lin_w.start..e.lin_b.end {
            model.params_mut()[i] = 0.0;
        }
        let h = model.encode_modality(0, &vec![0.0; 128]).unwrap();
        assert_eq!(h, vec![0.0; 4]);
        assert!(matches!(model.encode_modality(0, &[0.0; 3]), Err(ModelError::ShapeMismatch(_))));
    }

    #[test]
    fn zero_gate_network_gives_half() {
        let mut model = GatedFusionModel::new(small_arch(), 2).unwrap();
        let g = model.layout().gates[1].clone();
        for i in g.w.start..g.b.end {
            model.params_mut()[i] = 0.0;
        }
        let h = [1.0, -3.0, 2.0, 0.5];
        assert_eq!(model.gate(1, &h, &[0.2, 0.1, 0.9], true).unwrap(), 0.5);
        assert_eq!(model.gate(1, &h, &[0.2, 0.1, 0.9], false).unwrap(), 0.0);
    }

    #[test]
    fn identity_context_encoder_passes_non_negative_context() {
        let mut model = GatedFusionModel::new(small_arch(), 3).unwrap();
        let (w, b) = (model.layout().context_w.clone(), model.layout().context_b.clone());
        for (k, i) in w.enumerate() {
            model.params_mut()[i] = if k % 4 == 0 { 1.0 } else { 0.0 };
        }
        for i in b {
            model.params_mut()[i] = 0.0;
        }
        for p in [0.0, 0.1, 0.25] {
            let c = ContextVector::from_progress(p);
            let ct = model.encode_context(&c);
            for j in 0..3 {
                assert_eq!(ct[j], c.0[j].max(0.0));
            }
        }
    }

    #[test]
    fn zero_head_predicts_zero() {
        let mut model = GatedFusionModel::new(small_arch(), 4).unwrap();
        for i in model.layout().head_w.start..model.layout().head_b.end {
            model.params_mut()[i] = 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(model.predict(&random_window(&mut rng, 4, 64, 3)).unwrap(), 0.0);
    }

    #[test]
    fn masking_equals_zeroing_the_gate() {
        let model = GatedFusionModel::new(small_arch(), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = random_window(&mut rng, 4, 64, 3);
        let full = model.forward(&w).unwrap();
        let mut gates = full.gates.clone();
        gates[1] = 0.0;
        let manual = model.head(&fuse(&full.embeddings, &gates, 1e-8), &full.context_encoded);
        w.modality_mask[1] = false;
        assert_eq!(model.predict(&w).unwrap(), manual);
    }

    #[test]
    fn forward_is_deterministic_and_finite() {
        let model = GatedFusionModel::new(small_arch(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_window(&mut rng, 4, 64, 3);
        let a = model.forward(&w).unwrap();
        let b = model.forward(&w).unwrap();
        assert_eq!(a, b);
        assert!(a.output.is_finite());
        assert!(a.gates.iter().all(|g| (0.0..=1.0).contains(g)));
    }

    #[test]
    fn loss_examples() {
        assert_eq!(l1_loss(&[3.0], &[2.0]), 1.0);
        assert_eq!(l1_loss(&[1.5, 2.0], &[1.5, 2.0]), 0.0);
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let mut model = GatedFusionModel::new(small_arch(), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_window(&mut rng, 4, 64, 3);
        let shift = w.encoded_label() - model.predict(&w).unwrap();
        let b = model.layout().head_b.start;
        model.params_mut()[b] += shift;
        let residual = model.predict(&w).unwrap() - w.encoded_label();
        if residual == 0.0 {
            let (loss, grad) = model.loss_and_gradient(&[&w]).unwrap();
            assert_eq!(loss, 0.0);
            assert!(grad.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences_on_a_small_network() {
        let model = GatedFusionModel::new(small_arch(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch: Vec<WindowSample> = (0..3).map(|_| random_window(&mut rng, 4, 64, 3)).collect();
        let refs: Vec<&WindowSample> = batch.iter().collect();
        let (_, grad) = model.loss_and_gradient(&refs).unwrap();
        let loss = |m: &GatedFusionModel| {
            let p: Vec<f64> = refs.iter().map(|w| m.predict(w).unwrap()).collect();
            let y: Vec<f64> = refs.iter().map(|w| w.encoded_label()).collect();
            l1_loss(&p, &y)
        };
        let mut worst = 0.0f64;
        for i in 0..model.params().len() {
            let h = 1e-6;
            let mut plus = model.clone();
            plus.params_mut()[i] += h;
            let mut minus = model.clone();
            minus.params_mut()[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            worst = worst.max(err);
        }
        assert!(worst < 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn canonical_default_runs_on_full_windows() {
        let spec = ChannelSpec::canonical();
        let model = GatedFusionModel::for_spec(&spec, 2200, &TrainConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_window(&mut rng, 28, 2200, 11);
        assert!(model.predict(&w).unwrap().is_finite());
        let short = random_window(&mut rng, 28, 100, 11);
        assert!(matches!(model.predict(&short), Err(ModelError::ShapeMismatch(_))));
    }
}
