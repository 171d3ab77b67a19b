use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gatefuse::dataset::{
    assemble_windows, fit_channel_stats, make_folds, read_window_store, standardize, write_window_store, ChannelSpec, FoldSplit, FoldTag,
    StatsProvenance, WindowSample,
};
use gatefuse::evaluation::{
    ablation_table, gain_correlation, greedy_backward_ablation, metrics_table, read_quiz_csv, run_cv, write_predictions_csv, AblationTrace,
    BaselineKind, CvCorpus, FusionData, FusionFactory, GainCorrelation, MetricsReport, PredictorFactory, RidgeFactory, RunMetadata,
    SensorFreeFactory,
};
use gatefuse::features::{featurize_windows, FeatureMatrix};
use gatefuse::ingest::{load_cohort_manifest, load_session, CohortManifest, Diagnostic, LoadedSession};
use gatefuse::model::{self, write_checkpoint, write_gate_log, GateRecord, GatedFusionModel, TrainingLog};
use gatefuse::synth::{generate_cohort, CohortSummary, MANIFEST_FILE};

use crate::config::RunConfig;
use crate::error::{io, CliError};

pub const WINDOW_STORE: &str = "windows.gfw";
pub const WINDOW_SUMMARY: &str = "windows.json";
pub const FOLDS: &str = "folds.json";
pub const FEATURES: &str = "features.csv";
pub const MODEL: &str = "model.gfm";
pub const REPORT: &str = "report.md";

/// Every JSON report carries the resolved config and its hash.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub command: String,
    pub config: RunConfig,
    pub config_sha256: String,
    pub result: T,
}

fn envelope<T>(command: &str, config: &RunConfig, result: T) -> Envelope<T> {
    Envelope { command: command.into(), config: config.clone(), config_sha256: config.hash(), result }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Format { path: path.to_path_buf(), reason: e.to_string() })?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let file = File::open(path).map_err(io(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::Format { path: path.to_path_buf(), reason: e.to_string() })
}

fn require(path: PathBuf, producer: &str) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Usage(format!("{} not found; run `{producer}` first", path.display())))
    }
}

fn metadata(config: &RunConfig, spec: &ChannelSpec, predictor: &str, folds: &FoldSplit, subset: &[usize]) -> RunMetadata {
    RunMetadata {
        predictor: predictor.into(),
        seed: config.seed,
        config_hash: config.hash(),
        modality_subset: subset.iter().map(|&m| spec.modalities[m].key.clone()).collect(),
        split_id: folds.split_id(),
    }
}

fn load_corpus(config: &RunConfig) -> Result<(CohortManifest, Vec<LoadedSession>), CliError> {
    let dir = config.corpus_dir();
    let manifest = load_cohort_manifest(&dir.join(MANIFEST_FILE))?;
    let sessions = manifest.sessions.iter().map(|m| load_session(m, &dir)).collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, sessions))
}

fn load_windows(config: &RunConfig, spec: &ChannelSpec) -> Result<Vec<WindowSample>, CliError> {
    let path = require(config.paths.output.join(WINDOW_STORE), "window")?;
    let (manifest, windows) = read_window_store(&path)?;
    if manifest.channel_spec_hash != spec.hash() {
        return Err(CliError::Format { path, reason: "window store was built for a different channel spec".into() });
    }
    Ok(windows)
}

fn load_folds(config: &RunConfig) -> Result<FoldSplit, CliError> {
    Ok(FoldSplit::read_json(&require(config.paths.output.join(FOLDS), "window")?)?)
}

pub fn synth(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let dir = config.cohort_dir();
    let summary: CohortSummary = generate_cohort(&config.synth, &spec, &dir)?;
    write_json(&config.paths.output.join("synth.json"), &envelope("synth", config, &summary))?;
    Ok(format!("{} sessions, {} probes ({} excluded) in {}", summary.sessions, summary.probes, summary.excluded, dir.display()))
}

#[derive(Debug, Serialize)]
struct StreamSummary {
    device_id: String,
    samples: usize,
    native_rate_hz: f64,
    first_ms: Option<f64>,
    last_ms: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SessionSummary {
    participant_id: String,
    session_id: String,
    video_id: String,
    probes: usize,
    streams: Vec<StreamSummary>,
    diagnostics: Vec<Diagnostic>,
}

pub fn ingest(config: &RunConfig) -> Result<String, CliError> {
    let (_, sessions) = load_corpus(config)?;
    let summaries: Vec<SessionSummary> = sessions
        .iter()
        .map(|s| SessionSummary {
            participant_id: s.participant_id.clone(),
            session_id: s.session_id.clone(),
            video_id: s.video_id.clone(),
            probes: s.probes.len(),
            streams: s
                .streams
                .values()
                .map(|st| StreamSummary {
                    device_id: st.device_id.clone(),
                    samples: st.timestamps_ms.len(),
                    native_rate_hz: st.native_rate_hz,
                    first_ms: st.timestamps_ms.first().copied(),
                    last_ms: st.timestamps_ms.last().copied(),
                })
                .collect(),
            diagnostics: s.diagnostics.clone(),
        })
        .collect();
    let n_diag: usize = summaries.iter().map(|s| s.diagnostics.len()).sum();
    write_json(&config.paths.output.join("ingest.json"), &envelope("ingest", config, &summaries))?;
    Ok(format!("{} sessions ingested, {n_diag} diagnostics", summaries.len()))
}

#[derive(Debug, Serialize)]
struct WindowSummary {
    windows: usize,
    excluded_probes: usize,
    n_samples: usize,
    session_counts: Vec<(String, usize, usize)>,
    fold_split_id: u64,
}

pub fn window(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let (_, sessions) = load_corpus(config)?;
    let assembled = assemble_windows(&sessions, &spec, &config.window)?;
    let out = &config.paths.output;
    std::fs::create_dir_all(out).map_err(io(out))?;
    write_window_store(&out.join(WINDOW_STORE), &assembled.windows, &spec, StatsProvenance::Raw)?;
    let folds = make_folds(&assembled.windows, config.folds.k, config.seed)?;
    folds.write_json(&out.join(FOLDS)).map_err(io(&out.join(FOLDS)))?;
    let summary = WindowSummary {
        windows: assembled.windows.len(),
        excluded_probes: assembled.excluded(),
        n_samples: config.window.n_samples(),
        session_counts: assembled.session_counts.clone(),
        fold_split_id: folds.split_id(),
    };
    write_json(&out.join(WINDOW_SUMMARY), &envelope("window", config, &summary))?;
    Ok(format!("{} windows ({} probes excluded), {}-fold split {}", summary.windows, summary.excluded_probes, folds.k(), folds.split_id()))
}

pub fn featurize(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let windows = load_windows(config, &spec)?;
    let (_, sessions) = load_corpus(config)?;
    let features = featurize_windows(&sessions, &windows, &spec)?;
    let path = config.paths.output.join(FEATURES);
    features.write_csv(create(&path)?)?;
    Ok(format!("{} rows × {} features in {}", features.rows.len(), features.columns.len(), path.display()))
}

fn load_features(config: &RunConfig, n: usize) -> Result<FeatureMatrix, CliError> {
    let path = require(config.paths.output.join(FEATURES), "featurize")?;
    let features = FeatureMatrix::read_csv(File::open(&path).map_err(io(&path))?)?;
    if features.rows.len() != n {
        return Err(CliError::Format { path, reason: format!("{} feature rows for {n} windows; rerun `featurize`", features.rows.len()) });
    }
    Ok(features)
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    n_windows: usize,
    n_params: usize,
    log: TrainingLog,
}

/// Fits the fusion model once on every window, with channel statistics from
/// the whole corpus.
pub fn train(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let windows = load_windows(config, &spec)?;
    let active = config.modality_subset(&spec)?;
    let refs: Vec<&WindowSample> = windows.iter().collect();
    let stats = fit_channel_stats(&refs, &spec, FoldTag::FULL_CORPUS)?;
    let standardized =
        windows.iter().map(|w| standardize(w, &stats, &spec, FoldTag::FULL_CORPUS)).collect::<Result<Vec<_>, _>>()?;
    let n_samples = windows.first().map_or(0, |w| w.n_samples);
    let arch = config.train.architecture(&spec, n_samples).with_active(&active);
    let init = GatedFusionModel::new(arch, config.seed)?;
    let refs: Vec<&WindowSample> = standardized.iter().collect();
    let outcome = model::train(&init, &refs, &config.train)?;

    let out = &config.paths.output;
    let model_path = out.join(MODEL);
    write_checkpoint(&outcome.model, create(&model_path)?)?;
    write_json(&out.join("channel_stats.json"), &stats)?;
    let keys: Vec<String> = outcome.model.architecture().modalities.iter().map(|m| m.key.clone()).collect();
    let records: Vec<GateRecord> = outcome
        .gates
        .iter()
        .flat_map(|g| g.gammas.iter().zip(&keys).map(move |(&gamma, k)| GateRecord { window_id: g.index, modality: k.clone(), gamma }))
        .collect();
    write_gate_log(&records, create(&out.join("gates.csv"))?)?;
    let summary = TrainSummary { n_windows: windows.len(), n_params: outcome.model.params().len(), log: outcome.log };
    write_json(&out.join("training.json"), &envelope("train", config, &summary))?;
    Ok(format!(
        "trained on {} windows, best epoch {} (validation L1 {:.4}); checkpoint {}",
        summary.n_windows,
        summary.log.best_epoch,
        summary.log.best_validation_loss,
        model_path.display()
    ))
}

fn report_line(name: &str, r: &MetricsReport) -> String {
    format!(
        "{name}: MAE {:.3} ± {:.3}, within-1 {:.2}%, binary acc {:.2}%, macro-F1 {:.2}% (pooled MAE {:.3})",
        r.mean.mae, r.std.mae, r.mean.within1, r.mean.binary_accuracy, r.mean.binary_macro_f1, r.pooled.mae
    )
}

pub fn eval(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let windows = load_windows(config, &spec)?;
    let folds = load_folds(config)?;
    let subset = config.modality_subset(&spec)?;
    let corpus = CvCorpus::from_windows(&windows);
    let name = config.eval.baseline.as_str();
    let meta = metadata(config, &spec, name, &folds, &subset);
    let out = &config.paths.output;
    let outcome = match name {
        "fusion" => {
            let data = FusionData::new(&windows, &spec, false);
            let factory = FusionFactory::new(&data, config.train.clone(), subset.clone()).keeping_fits();
            let outcome = run_cv(&corpus, &folds, &factory, config.seed, meta)?;
            for fit in factory.take_fits() {
                write_checkpoint(&fit.model, create(&out.join(format!("fusion_fold{}.gfm", fit.fold)))?)?;
            }
            outcome
        }
        "ridge" => {
            let features = load_features(config, windows.len())?;
            let factory = RidgeFactory { features: &features, columns: FeatureMatrix::subset_columns(&spec, &subset), alpha: config.eval.ridge_alpha };
            run_cv(&corpus, &folds, &factory, config.seed, meta)?
        }
        kind => {
            let kind: BaselineKind = kind.parse().map_err(CliError::Config)?;
            run_cv(&corpus, &folds, &SensorFreeFactory { kind }, config.seed, meta)?
        }
    };
    write_predictions_csv(&outcome.predictions, create(&out.join(format!("predictions_{name}.csv")))?)?;
    write_json(&out.join(format!("eval_{name}.json")), &envelope("eval", config, &outcome.report))?;
    Ok(report_line(name, &outcome.report))
}

pub fn ablate(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let windows = load_windows(config, &spec)?;
    let folds = load_folds(config)?;
    let start = config.modality_subset(&spec)?;
    let corpus = CvCorpus::from_windows(&windows);
    let name = config.eval.baseline.as_str();
    let meta = metadata(config, &spec, name, &folds, &start);
    let trace: AblationTrace = match name {
        "fusion" => {
            let data = FusionData::new(&windows, &spec, true);
            greedy_backward_ablation(&corpus, &folds, &spec, &start, config.seed, true, &meta, |s| -> Box<dyn PredictorFactory> {
                Box::new(FusionFactory::new(&data, config.train.clone(), s.to_vec()))
            })?
        }
        "ridge" => {
            let features = load_features(config, windows.len())?;
            let alpha = config.eval.ridge_alpha;
            greedy_backward_ablation(&corpus, &folds, &spec, &start, config.seed, true, &meta, |s| -> Box<dyn PredictorFactory> {
                Box::new(RidgeFactory { features: &features, columns: FeatureMatrix::subset_columns(&spec, s), alpha })
            })?
        }
        other => return Err(CliError::Config(format!("ablation needs eval.baseline = fusion or ridge, got {other:?}"))),
    };
    write_json(&config.paths.output.join(format!("ablation_{name}.json")), &envelope("ablate", config, &trace))?;
    let order: Vec<&str> = trace.removal_order().iter().map(|&m| spec.modalities[m].key.as_str()).collect();
    Ok(format!("{name} ablation: removal order {}", order.join(" → ")))
}

pub fn gain_corr(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let windows = load_windows(config, &spec)?;
    let dir = config.corpus_dir();
    let manifest = load_cohort_manifest(&dir.join(MANIFEST_FILE))?;
    let quiz_rel = manifest.quiz.ok_or_else(|| CliError::Format { path: dir.join(MANIFEST_FILE), reason: "cohort has no quiz table".into() })?;
    let quiz_path = dir.join(quiz_rel);
    let quiz = read_quiz_csv(File::open(&quiz_path).map_err(io(&quiz_path))?)?;
    let difficulty: Vec<(String, u8)> = windows.iter().map(|w| (w.video_id.clone(), w.label)).collect();
    let result: GainCorrelation = gain_correlation(&quiz, &difficulty)?;
    write_json(&config.paths.output.join("gain_corr.json"), &envelope("gain-corr", config, &result))?;
    Ok(format!("r = {:.3} over {} videos ({} quiz records excluded)", result.r, result.n, result.excluded))
}

/// Renders every stored evaluation and ablation report as tables.
pub fn report(config: &RunConfig) -> Result<String, CliError> {
    let spec = ChannelSpec::canonical();
    let out = &config.paths.output;
    let mut names: Vec<PathBuf> = std::fs::read_dir(out)
        .map_err(io(out))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();

    let mut evals: Vec<(String, MetricsReport)> = Vec::new();
    let mut ablations: Vec<(String, AblationTrace)> = Vec::new();
    let mut gain: Option<GainCorrelation> = None;
    for p in &names {
        let s = stem(p);
        if let Some(name) = s.strip_prefix("eval_") {
            evals.push((name.to_string(), read_json::<Envelope<MetricsReport>>(p)?.result));
        } else if let Some(name) = s.strip_prefix("ablation_") {
            ablations.push((name.to_string(), read_json::<Envelope<AblationTrace>>(p)?.result));
        } else if s == "gain_corr" {
            gain = Some(read_json::<Envelope<GainCorrelation>>(p)?.result);
        }
    }
    if evals.is_empty() && ablations.is_empty() && gain.is_none() {
        return Err(CliError::Usage(format!("no reports in {}; run `eval`, `ablate` or `gain-corr` first", out.display())));
    }

    let mut text = String::new();
    if !evals.is_empty() {
        let rows: Vec<(&str, &MetricsReport)> = evals.iter().map(|(n, r)| (n.as_str(), r)).collect();
        text.push_str("## Cross-validated metrics (fold mean ± std)\n\n```\n");
        text.push_str(&metrics_table(&rows));
        text.push_str("```\n");
    }
    for (name, trace) in &ablations {
        text.push_str(&format!("\n## Greedy backward ablation ({name})\n\n```\n"));
        text.push_str(&ablation_table(trace, &spec));
        text.push_str("```\n");
    }
    if let Some(g) = &gain {
        text.push_str(&format!("\n## Learning gain\n\nPearson r = {:.3} over {} videos ({} records excluded)\n", g.r, g.n, g.excluded));
    }
    let path = out.join(REPORT);
    let mut file = create(&path)?;
    file.write_all(text.as_bytes()).and_then(|_| file.flush()).map_err(io(&path))?;
    Ok(text.trim_end().to_string())
}
