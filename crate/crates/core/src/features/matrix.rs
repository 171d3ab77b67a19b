use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{feature_vector, sanitize, FeatureError, FEATURE_NAMES};
use crate::dataset::{ChannelSpec, WindowSample, WindowSpan, VIDEO_PROGRESS_CHANNEL};
use crate::ingest::{LoadedSession, SensorStream};

/// Full-layout feature row for one window: 8 features per sensor channel in
/// tensor order, then video progress.
pub fn window_features(streams: &BTreeMap<String, SensorStream>, span: &WindowSpan, video_progress: f64, spec: &ChannelSpec) -> Vec<f64> {
    let mut row = Vec::with_capacity((spec.n_channels() - 1) * 8 + 1);
    for c in spec.sensor_channels() {
        let desc = &spec.channels[c];
        let samples: Vec<f64> = match streams.get(&desc.device_id).and_then(|s| s.channel_index(&desc.stream_channel).map(|k| (s, k))) {
            Some((stream, k)) => span
                .sample_ranges(stream)
                .into_iter()
                .flat_map(|r| stream.values[k][r].iter().flatten().copied().collect::<Vec<_>>())
                .collect(),
            None => Vec::new(),
        };
        let mut f = feature_vector(&samples);
        sanitize(&mut f);
        row.extend_from_slice(&f);
    }
    row.push(video_progress);
    row
}

/// Feature rows aligned with a window list (row `i` belongs to window `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

pub fn featurize_windows(sessions: &[LoadedSession], windows: &[WindowSample], spec: &ChannelSpec) -> Result<FeatureMatrix, FeatureError> {
    let by_session: BTreeMap<&str, &LoadedSession> = sessions.iter().map(|s| (s.session_id.as_str(), s)).collect();
    let mut rows = Vec::with_capacity(windows.len());
    for w in windows {
        let session = by_session
            .get(w.session_id.as_str())
            .ok_or_else(|| FeatureError::Format(format!("no streams for session {}", w.session_id)))?;
        rows.push(window_features(&session.streams, &w.span, w.video_progress, spec));
    }
    Ok(FeatureMatrix { columns: FeatureMatrix::column_names(spec), rows, labels: windows.iter().map(|w| w.label).collect() })
}

impl FeatureMatrix {
    pub fn column_names(spec: &ChannelSpec) -> Vec<String> {
        let mut names: Vec<String> = spec
            .sensor_channels()
            .flat_map(|c| FEATURE_NAMES.iter().map(move |f| format!("{}_{f}", spec.channels[c].name)))
            .collect();
        names.push(VIDEO_PROGRESS_CHANNEL.into());
        names
    }

    /// Column indices for a modality subset; video progress is always kept.
    pub fn subset_columns(spec: &ChannelSpec, modalities: &[usize]) -> Vec<usize> {
        let mut cols = Vec::new();
        for (slot, c) in spec.sensor_channels().enumerate() {
            if spec.channels[c].modality.is_some_and(|m| modalities.contains(&m)) {
                cols.extend(slot * 8..slot * 8 + 8);
            }
        }
        cols.push(spec.sensor_channels().count() * 8);
        cols
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FeatureError> {
        let mut csv = csv::Writer::from_writer(out);
        let mut header = vec!["window_id".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("label".into());
        csv.write_record(&header).map_err(fmt_err)?;
        for (i, (row, label)) in self.rows.iter().zip(&self.labels).enumerate() {
            let mut record = vec![i.to_string()];
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(label.to_string());
            csv.write_record(&record).map_err(fmt_err)?;
        }
        csv.flush().map_err(fmt_err)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, FeatureError> {
        let mut csv = csv::Reader::from_reader(input);
        let header = csv.headers().map_err(fmt_err)?.clone();
        let n = header.len();
        if n < 3 || &header[0] != "window_id" || &header[n - 1] != "label" {
            return Err(FeatureError::Format("unexpected feature header".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).take(n - 2).map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (expect, record) in csv.records().enumerate() {
            let record = record.map_err(fmt_err)?;
            if record[0].parse::<usize>().ok() != Some(expect) {
                return Err(FeatureError::Format(format!("window ids must be dense, row {expect}")));
            }
            let row: Result<Vec<f64>, _> = record.iter().skip(1).take(n - 2).map(str::parse::<f64>).collect();
            rows.push(row.map_err(fmt_err)?);
            labels.push(record[n - 1].parse::<u8>().map_err(fmt_err)?);
        }
        Ok(FeatureMatrix { columns, rows, labels })
    }
}

fn fmt_err(e: impl std::fmt::Display) -> FeatureError {
    FeatureError::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TimestampSource;

    #[test]
    fn full_layout_has_217_columns() {
        let spec = ChannelSpec::canonical();
        assert_eq!(FeatureMatrix::column_names(&spec).len(), 217);
        let row = window_features(&BTreeMap::new(), &WindowSpan::contiguous(0.0, 1.0), 0.3, &spec);
        assert_eq!(row.len(), 217);
        assert_eq!(row[216], 0.3);
        assert!(row[..216].iter().all(|&v| v == 0.0));
        let eda = spec.modality_index("eda").unwrap();
        assert_eq!(FeatureMatrix::subset_columns(&spec, &[eda]), vec![40, 41, 42, 43, 44, 45, 46, 47, 216]);
    }

    #[test]
    fn features_use_only_in_span_native_samples() {
        let spec = ChannelSpec::canonical();
        let ts: Vec<f64> = (0..100).map(|i| i as f64 * 200.0).collect();
        let stream = SensorStream {
            device_id: "band_eda".into(),
            channels: vec!["eda_kohm".into()],
            timestamps_ms: ts.clone(),
            values: vec![ts.iter().map(|t| Some(t / 200.0)).collect()],
            native_rate_hz: 5.0,
            timestamp_source: TimestampSource::SystemTime,
        };
        let streams = BTreeMap::from([("band_eda".to_string(), stream)]);
        let row = window_features(&streams, &WindowSpan::contiguous(1000.0, 2000.0), 0.0, &spec);
        // samples 5..=9
        assert_eq!(&row[40..48], &feature_vector(&[5.0, 6.0, 7.0, 8.0, 9.0]));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let m = FeatureMatrix {
            columns: vec!["a_mean".into(), VIDEO_PROGRESS_CHANNEL.into()],
            rows: vec![vec![0.1 + 0.2, 0.3], vec![-1e-300, 1.0]],
            labels: vec![2, 5],
        };
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("window_id,a_mean,video_progress,label\n"));
        assert_eq!(FeatureMatrix::read_csv(buf.as_slice()).unwrap(), m);
    }
}
