use proptest::prelude::*;

use gatefuse::dataset::{
    assemble_windows, make_folds, make_folds_from_labels, read_window_store, write_window_store, ChannelSpec, StatsProvenance, WindowConfig,
};
use gatefuse::evaluation::{run_cv, BaselineKind, CvCorpus, RidgeFactory, RunMetadata, SensorFreeFactory};
use gatefuse::features::{featurize_windows, FeatureMatrix};
use gatefuse::ingest::{load_cohort_manifest, load_session, LoadedSession};
use gatefuse::model::{read_checkpoint, write_checkpoint, GatedFusionModel, TrainConfig};
use gatefuse::synth::{generate_cohort, generate_session, plan_cohort, synth_windows, SynthConfig, MANIFEST_FILE};

fn meta() -> RunMetadata {
    RunMetadata { predictor: "test".into(), seed: 0, config_hash: String::new(), modality_subset: vec![], split_id: 0 }
}

fn small(kappa: f64) -> SynthConfig {
    SynthConfig { participants: 8, videos_per_participant: 2, video_pool: 4, ..SynthConfig::default() }.with_coupling(&["eda"], kappa)
}

fn sessions(config: &SynthConfig, spec: &ChannelSpec) -> Vec<LoadedSession> {
    let plan = plan_cohort(config, spec).unwrap();
    (0..plan.sessions.len()).map(|i| generate_session(config, spec, &plan, i)).collect()
}

#[test]
fn disk_cohort_windows_match_in_memory_windows() {
    let spec = ChannelSpec::canonical();
    let config = SynthConfig { video_length_s: 180.0, ..small(0.5) };
    let window = WindowConfig { rate_hz: 5.0, ..WindowConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    generate_cohort(&config, &spec, dir.path()).unwrap();
    let manifest = load_cohort_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
    let loaded: Vec<LoadedSession> = manifest.sessions.iter().map(|m| load_session(m, dir.path()).unwrap()).collect();
    let from_disk = assemble_windows(&loaded, &spec, &window).unwrap();
    let direct = synth_windows(&config, &spec, &window).unwrap();
    assert_eq!(from_disk.windows, direct.windows);
    assert_eq!(from_disk.session_counts, direct.session_counts);

    let store = dir.path().join("w.gfw");
    write_window_store(&store, &direct.windows, &spec, StatsProvenance::Raw).unwrap();
    let (manifest, back) = read_window_store(&store).unwrap();
    assert_eq!(back, direct.windows);
    assert_eq!(manifest.stats, StatsProvenance::Raw);
    assert_eq!(manifest.channel_spec_hash, spec.hash());
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let spec = ChannelSpec::canonical();
    let corpus = synth_windows(&SynthConfig { video_length_s: 120.0, ..small(0.5) }, &spec, &WindowConfig { rate_hz: 5.0, ..WindowConfig::default() }).unwrap();
    let config = TrainConfig { conv_channels: [4, 4], ..TrainConfig::default() };
    let model = GatedFusionModel::for_spec(&spec, corpus.windows[0].n_samples, &config).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&model, &mut bytes).unwrap();
    let (back, header) = read_checkpoint(bytes.as_slice()).unwrap();
    assert_eq!(header.channel_spec_hash, spec.hash());
    for w in &corpus.windows {
        let (a, b) = (model.predict(w).unwrap(), back.predict(w).unwrap());
        assert!((a - b).abs() < 1e-4 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn ridge_on_the_carrier_beats_the_mean_baseline() {
    let spec = ChannelSpec::canonical();
    let config = small(1.0);
    let loaded = sessions(&config, &spec);
    let windows = assemble_windows(&loaded, &spec, &WindowConfig { rate_hz: 2.0, ..WindowConfig::default() }).unwrap().windows;
    let features = featurize_windows(&loaded, &windows, &spec).unwrap();
    let folds = make_folds(&windows, 4, 1).unwrap();
    let corpus = CvCorpus::from_windows(&windows);
    let eda = spec.modality_index("eda").unwrap();
    let ridge = RidgeFactory { features: &features, columns: FeatureMatrix::subset_columns(&spec, &[eda]), alpha: 1.0 };
    let ridge = run_cv(&corpus, &folds, &ridge, 0, meta()).unwrap();
    let mean = run_cv(&corpus, &folds, &SensorFreeFactory { kind: BaselineKind::Mean }, 0, meta()).unwrap();
    assert!(ridge.report.mean.mae < mean.report.mean.mae - 0.05, "{} vs {}", ridge.report.mean.mae, mean.report.mean.mae);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cv_tests_every_window_once(seed in 0u64..1000, n_participants in 4usize..10) {
        let mut participants = Vec::new();
        let mut labels = Vec::new();
        for p in 0..n_participants {
            for i in 0..15 {
                participants.push(format!("P{p:02}"));
                labels.push(((i + p) % 5 + 1) as u8);
            }
        }
        let pairs: Vec<(&str, u8)> = participants.iter().map(String::as_str).zip(labels.iter().copied()).collect();
        let folds = make_folds_from_labels(&pairs, 4, seed).unwrap();
        let corpus = CvCorpus::from_labels(participants.clone(), labels.clone());
        let out = run_cv(&corpus, &folds, &SensorFreeFactory { kind: BaselineKind::Random }, seed, meta()).unwrap();
        let ids: Vec<usize> = out.predictions.iter().map(|p| p.window_id).collect();
        prop_assert_eq!(ids, (0..labels.len()).collect::<Vec<_>>());
        for p in &out.predictions {
            prop_assert!(folds.is_test(p.fold, &p.participant_id));
            prop_assert!((1..=5).contains(&p.predicted));
        }
        let pooled_n: usize = out.report.folds.iter().map(|f| f.n).sum();
        prop_assert_eq!(pooled_n, labels.len());
    }
}
