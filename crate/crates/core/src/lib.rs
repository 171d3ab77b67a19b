//! Probe-aligned multimodal engagement estimation.
//!
//! The crate covers the whole offline pipeline: raw stream ingest and clock
//! normalization ([`ingest`]), probe-aligned 28×2200 windows and grouped folds
//! ([`dataset`]), native-rate statistical features ([`features`]), the
//! context-informed gated fusion network trained with hand-derived gradients
//! ([`model`]), sensor-free and ridge reference predictors ([`baselines`]),
//! cross-validation, ablation and learning-gain analyses ([`evaluation`]), and
//! a seeded synthetic cohort generator ([`synth`]).

pub mod baselines;
pub mod dataset;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod model;
pub mod synth;

mod numeric;

pub use numeric::{round_half_away, round_to_decimals};
