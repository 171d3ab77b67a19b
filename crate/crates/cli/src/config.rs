use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gatefuse::dataset::{ChannelSpec, WindowConfig};
use gatefuse::model::TrainConfig;
use gatefuse::synth::SynthConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Every artifact is written below this directory.
    pub output: PathBuf,
    /// Raw cohort to ingest; empty means `<output>/cohort`, where `synth` writes.
    pub corpus: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { output: PathBuf::from("gatefuse-out"), corpus: PathBuf::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldConfig {
    pub k: usize,
}

impl Default for FoldConfig {
    fn default() -> Self {
        FoldConfig { k: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// `mean`, `mode`, `random`, `ridge` or `fusion`.
    pub baseline: String,
    pub ridge_alpha: f64,
    /// Modality keys to use; empty means all.
    pub modalities: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { baseline: "mean".into(), ridge_alpha: 1.0, modalities: Vec::new() }
    }
}

/// Fully resolved run configuration. `seed` drives the synthetic cohort, the
/// fold split and every training run; the per-section seeds are derived from
/// it and cannot be set separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub window: WindowConfig,
    pub folds: FoldConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            window: WindowConfig::default(),
            folds: FoldConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

const DERIVED_SEEDS: [&str; 2] = ["synth.seed", "train.seed"];

impl RunConfig {
    /// Reads `path` (if any), applies `--key=value` overrides and validates.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = toml::Table::try_from(RunConfig::default()).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let file: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
            for (key, value) in flatten(&file, "") {
                set(&mut table, &key, value)?;
            }
        }
        for (key, raw) in parse_overrides(overrides)? {
            let key = expand_key(&table, &key)?;
            set(&mut table, &key, parse_value(&raw))?;
        }
        let mut config: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        config.synth.seed = config.seed;
        config.train.seed = config.seed;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |r: String| Err(CliError::Config(r));
        let spec = ChannelSpec::canonical();
        let w = &self.window;
        let samples = w.window_ms * w.rate_hz / 1000.0;
        if !(w.window_ms > 0.0 && w.rate_hz > 0.0) || samples.fract() != 0.0 {
            return bad(format!("window.window_ms · window.rate_hz / 1000 must be a positive integer, got {samples}"));
        }
        if self.folds.k < 2 {
            return bad("folds.k must be at least 2".into());
        }
        if !["mean", "mode", "random", "ridge", "fusion"].contains(&self.eval.baseline.as_str()) {
            return bad(format!("eval.baseline {:?}: expected mean, mode, random, ridge or fusion", self.eval.baseline));
        }
        if !(self.eval.ridge_alpha > 0.0) {
            return bad("eval.ridge_alpha must be positive".into());
        }
        self.modality_subset(&spec)?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.synth.validate(&spec).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Slot indices of `eval.modalities`, in channel-spec order.
    pub fn modality_subset(&self, spec: &ChannelSpec) -> Result<Vec<usize>, CliError> {
        if self.eval.modalities.is_empty() {
            return Ok((0..spec.n_modalities()).collect());
        }
        let mut out = Vec::new();
        for key in &self.eval.modalities {
            out.push(spec.modality_index(key).ok_or_else(|| CliError::Config(format!("unknown modality {key:?}")))?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn corpus_dir(&self) -> PathBuf {
        if self.paths.corpus.as_os_str().is_empty() {
            self.cohort_dir()
        } else {
            self.paths.corpus.clone()
        }
    }

    pub fn cohort_dir(&self) -> PathBuf {
        self.paths.output.join("cohort")
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn flatten(table: &toml::Table, prefix: &str) -> Vec<(String, toml::Value)> {
    let mut out = Vec::new();
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            // coupling is a free-form map and is replaced as a whole
            toml::Value::Table(t) if key != "synth.coupling" => out.extend(flatten(t, &key)),
            _ => out.push((key, v.clone())),
        }
    }
    out
}

fn set(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    if DERIVED_SEEDS.contains(&key) {
        return Err(CliError::Config(format!("{key} is derived from the top-level seed; set `seed` instead")));
    }
    let parts: Vec<&str> = key.split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut node = table;
    for s in sections {
        node = match node.get_mut(*s) {
            Some(toml::Value::Table(t)) => t,
            _ => return Err(CliError::Config(format!("unknown config key {key:?}"))),
        };
    }
    match node.get(*last) {
        Some(old) => {
            let value = coerce(old, value);
            node.insert(last.to_string(), value);
            Ok(())
        }
        None => Err(CliError::Config(format!("unknown config key {key:?}"))),
    }
}

/// Integers given where floats are expected (e.g. `--train.learning_rate=1`).
fn coerce(old: &toml::Value, value: toml::Value) -> toml::Value {
    match (old, value) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (toml::Value::String(_), v @ (toml::Value::Integer(_) | toml::Value::Float(_) | toml::Value::Boolean(_))) => {
            toml::Value::String(v.to_string())
        }
        (toml::Value::Array(_), toml::Value::String(s)) => {
            toml::Value::Array(s.split(',').filter(|p| !p.is_empty()).map(|p| toml::Value::String(p.trim().to_string())).collect())
        }
        (_, v) => v,
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Accepts `--key=value` and `--key value`.
fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument {arg:?}; overrides look like --key=value")));
        };
        match body.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| CliError::Usage(format!("--{body} needs a value")))?;
                out.push((body.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

/// A bare key names a top-level entry, or the unique section field with that
/// name (so `--baseline mean` means `--eval.baseline=mean`).
fn expand_key(table: &toml::Table, key: &str) -> Result<String, CliError> {
    let key = key.replace('-', "_");
    if key.contains('.') || table.get(&key).is_some_and(|v| !v.is_table()) {
        return Ok(key);
    }
    let owners: Vec<&String> = table
        .iter()
        .filter(|(_, v)| v.as_table().is_some_and(|t| t.contains_key(&key)))
        .map(|(k, _)| k)
        .filter(|section| !DERIVED_SEEDS.contains(&format!("{section}.{key}").as_str()))
        .collect();
    match owners.as_slice() {
        [one] => Ok(format!("{one}.{key}")),
        [] => Err(CliError::Config(format!("unknown config key {key:?}"))),
        many => Err(CliError::Config(format!(
            "ambiguous key {key:?}; use one of {}",
            many.iter().map(|s| format!("{s}.{key}")).collect::<Vec<_>>().join(", ")
        ))),
    }
}
