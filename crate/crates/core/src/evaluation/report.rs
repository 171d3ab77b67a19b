use std::fmt::Write as _;
use std::io::Write;

use super::ablation::AblationTrace;
use super::cv::Prediction;
use super::metrics::MetricsReport;
use super::EvalError;
use crate::dataset::ChannelSpec;

const HEADER: [&str; 4] = ["MAE", "Within-1 Acc (%)", "Binary Acc (%)", "Binary Macro-F1 (%)"];

fn row(out: &mut String, name: &str, r: &MetricsReport, width: usize) {
    let cells = [
        format!("{:.2} ± {:.2}", r.mean.mae, r.std.mae),
        format!("{:.2} ± {:.2}", r.mean.within1, r.std.within1),
        format!("{:.2} ± {:.2}", r.mean.binary_accuracy, r.std.binary_accuracy),
        format!("{:.2} ± {:.2}", r.mean.binary_macro_f1, r.std.binary_macro_f1),
    ];
    let _ = write!(out, "{name:<width$}");
    for (c, h) in cells.iter().zip(HEADER) {
        let _ = write!(out, "  {c:>w$}", w = h.chars().count().max(15));
    }
    out.push('\n');
}

fn header(out: &mut String, first: &str, width: usize) {
    let _ = write!(out, "{first:<width$}");
    for h in HEADER {
        let _ = write!(out, "  {h:>w$}", w = h.chars().count().max(15));
    }
    out.push('\n');
}

/// Fold mean ± std per model, in the column order MAE, within-1, binary
/// accuracy, binary Macro-F1.
pub fn metrics_table(rows: &[(&str, &MetricsReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    header(&mut out, "Model", width);
    for (name, r) in rows {
        row(&mut out, name, r, width);
    }
    out
}

/// One row per greedy step, named after the removed modality.
pub fn ablation_table(trace: &AblationTrace, spec: &ChannelSpec) -> String {
    let mut rows: Vec<(String, &MetricsReport)> = Vec::new();
    if let Some(r) = &trace.initial {
        rows.push(("All modalities".into(), r));
    }
    for s in &trace.steps {
        rows.push((format!("− {}", spec.modalities[s.removed].display_name), &s.report));
    }
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    header(&mut out, "Subset", width);
    for (name, r) in &rows {
        row(&mut out, name, r, width);
    }
    out
}

/// CSV `window_id,participant_id,session_id,probe_index,fold,label,prediction_raw,prediction`.
pub fn write_predictions_csv<W: Write>(predictions: &[Prediction], out: W) -> Result<(), EvalError> {
    let mut csv = csv::Writer::from_writer(out);
    let fmt = |e: csv::Error| EvalError::Format(e.to_string());
    csv.write_record(["window_id", "participant_id", "session_id", "probe_index", "fold", "label", "prediction_raw", "prediction"]).map_err(fmt)?;
    for p in predictions {
        csv.write_record([
            p.window_id.to_string(),
            p.participant_id.clone(),
            p.session_id.clone(),
            p.probe_index.to_string(),
            p.fold.to_string(),
            p.label.to_string(),
            p.raw.to_string(),
            p.predicted.to_string(),
        ])
        .map_err(fmt)?;
    }
    Ok(csv.flush()?)
}

#[cfg(test)]
mod tests {
    use super::super::metrics::{FoldMetrics, RunMetadata};
    use super::super::ablation::{AblationStep, CandidateResult};
    use super::*;

    fn report(mae: f64) -> MetricsReport {
        let f = FoldMetrics { n: 5, mae, within1: 80.0, binary_accuracy: 61.97, binary_macro_f1: 38.0 };
        let meta = RunMetadata { predictor: "mean".into(), seed: 0, config_hash: String::new(), modality_subset: vec![], split_id: 0 };
        MetricsReport::from_folds(meta, vec![f, f], f)
    }

    #[test]
    fn metrics_table_lists_models_in_order() {
        let (a, b) = (report(0.98), report(1.32));
        let t = metrics_table(&[("Mean", &a), ("Mode", &b)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Model") && lines[0].contains("Binary Macro-F1 (%)"));
        assert!(lines[1].starts_with("Mean") && lines[1].contains("0.98 ± 0.00"));
        assert!(lines[2].contains("1.32 ± 0.00"));
    }

    #[test]
    fn ablation_rows_name_removed_modalities() {
        let spec = ChannelSpec::canonical();
        let eda = spec.modality_index("eda").unwrap();
        let trace = AblationTrace {
            start: vec![eda, 0],
            initial: Some(report(1.0)),
            steps: vec![AblationStep {
                removed: eda,
                removed_key: "eda".into(),
                remaining: vec![0],
                report: report(0.9),
                candidates: vec![CandidateResult { removed: eda, mean_mae: 0.9 }],
            }],
        };
        let t = ablation_table(&trace, &spec);
        assert!(t.lines().nth(1).unwrap().starts_with("All modalities"));
        assert!(t.lines().nth(2).unwrap().starts_with("− EDA"));
    }

    #[test]
    fn predictions_csv_header() {
        let p = Prediction {
            window_id: 0,
            fold: 1,
            participant_id: "P".into(),
            session_id: "S".into(),
            probe_index: 2,
            label: 3,
            raw: 1.5,
            predicted: 3,
        };
        let mut buf = Vec::new();
        write_predictions_csv(&[p], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "window_id,participant_id,session_id,probe_index,fold,label,prediction_raw,prediction\n0,P,S,2,1,3,1.5,3\n"
        );
    }
}
