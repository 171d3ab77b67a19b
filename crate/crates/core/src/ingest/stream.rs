use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Diagnostic, IngestError};

/// Where a stream's canonical timestamps originate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampSource {
    ReceiverArrival,
    DeviceClock,
    SystemTime,
    PacketEmbedded,
}

/// Which timestamp column of a stream file is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampColumn {
    /// `timestamp_ms`, the receiver / host clock shared with the probe log.
    #[default]
    Primary,
    /// `device_time_ms`, the device's own clock.
    Device,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    #[serde(rename = "ms")]
    Milliseconds,
    #[serde(rename = "s")]
    Seconds,
}

impl TimeUnit {
    fn to_ms(self, value: f64) -> f64 {
        match self {
            TimeUnit::Milliseconds => value,
            TimeUnit::Seconds => value * 1000.0,
        }
    }
}

/// Keep only rows whose quality channel equals `accept`; other rows become missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityFilter {
    pub channel: String,
    pub accept: f64,
}

/// Clock selection and stream metadata for one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevicePolicy {
    pub rate_hz: f64,
    #[serde(default)]
    pub column: TimestampColumn,
    #[serde(default)]
    pub unit: TimeUnit,
    pub source: TimestampSource,
    /// Constant clock offset added to canonical timestamps (ms).
    #[serde(default)]
    pub offset_ms: f64,
    /// Samples share one timestamp per packet and need expansion.
    #[serde(default)]
    pub packetized: bool,
    #[serde(default)]
    pub quality_filter: Option<QualityFilter>,
}

/// Mapping from device id to its canonical clock policy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimestampPolicy {
    pub devices: BTreeMap<String, DevicePolicy>,
}

impl TimestampPolicy {
    pub fn insert(&mut self, device_id: impl Into<String>, policy: DevicePolicy) {
        self.devices.insert(device_id.into(), policy);
    }

    pub fn get(&self, device_id: &str) -> Result<&DevicePolicy, IngestError> {
        self.devices.get(device_id).ok_or_else(|| IngestError::UnknownDevice(device_id.to_string()))
    }
}

/// One device channel group at its native rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStream {
    pub device_id: String,
    pub channels: Vec<String>,
    /// Epoch milliseconds, one per sample.
    pub timestamps_ms: Vec<f64>,
    /// `values[c][i]` is channel `c` at sample `i`; `None` marks a missing cell.
    pub values: Vec<Vec<Option<f64>>>,
    pub native_rate_hz: f64,
    pub timestamp_source: TimestampSource,
}

impl SensorStream {
    pub fn len(&self) -> usize {
        self.timestamps_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_ms.is_empty()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    /// Index range of samples with `start_ms <= t < end_ms`. Requires sorted timestamps.
    pub fn span_indices(&self, start_ms: f64, end_ms: f64) -> std::ops::Range<usize> {
        let lo = self.timestamps_ms.partition_point(|&t| t < start_ms);
        let hi = self.timestamps_ms.partition_point(|&t| t < end_ms);
        lo..hi.max(lo)
    }

    pub fn is_sorted(&self) -> bool {
        self.timestamps_ms.windows(2).all(|w| w[0] <= w[1])
    }

    fn check_shape(&self) -> Result<(), IngestError> {
        if !(self.native_rate_hz > 0.0) {
            return Err(IngestError::MalformedFile {
                line: 0,
                reason: format!("non-positive rate {} for {}", self.native_rate_hz, self.device_id),
            });
        }
        if self.values.len() != self.channels.len() || self.values.iter().any(|v| v.len() != self.len()) {
            return Err(IngestError::MalformedFile { line: 0, reason: "ragged channel arrays".into() });
        }
        Ok(())
    }
}

/// Parses a stream CSV.
pub fn parse_stream(path: &Path, device_id: &str, policy: &TimestampPolicy) -> Result<SensorStream, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    read_stream(std::io::BufReader::new(file), device_id, policy)
}

/// Parses a stream CSV from any reader.
pub fn read_stream<R: Read>(reader: R, device_id: &str, policy: &TimestampPolicy) -> Result<SensorStream, IngestError> {
    let device = policy.get(device_id)?;
    let mut csv = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);

    let header = csv.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if header.get(0) != Some("timestamp_ms") {
        return Err(malformed(1, "first column must be `timestamp_ms`".into()));
    }
    let has_device_time = header.get(1) == Some("device_time_ms");
    let first_channel = if has_device_time { 2 } else { 1 };
    let time_col = match device.column {
        TimestampColumn::Primary => 0,
        TimestampColumn::Device if has_device_time => 1,
        TimestampColumn::Device => {
            return Err(malformed(1, "policy selects `device_time_ms` but the file has no such column".into()))
        }
    };
    let mut channels: Vec<String> = header.iter().skip(first_channel).map(str::to_string).collect();
    if channels.is_empty() {
        return Err(malformed(1, "no channel columns".into()));
    }
    let arity = header.len();

    let mut timestamps = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); channels.len()];
    let mut record = csv::StringRecord::new();
    loop {
        match csv.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(malformed(0, e.to_string())),
        }
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != arity {
            return Err(malformed(line, format!("expected {arity} fields, found {}", record.len())));
        }
        let raw_time = record[time_col]
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite())
            .ok_or_else(|| malformed(line, format!("unparseable timestamp `{}`", &record[time_col])))?;
        timestamps.push(device.unit.to_ms(raw_time) + device.offset_ms);
        for (c, column) in values.iter_mut().enumerate() {
            let cell = &record[first_channel + c];
            column.push(cell.parse::<f64>().ok().filter(|v| v.is_finite()));
        }
    }

    if let Some(filter) = &device.quality_filter {
        let q = channels
            .iter()
            .position(|c| *c == filter.channel)
            .ok_or_else(|| malformed(1, format!("quality channel `{}` not present", filter.channel)))?;
        let quality = values.remove(q);
        channels.remove(q);
        for column in values.iter_mut() {
            for (v, ok) in column.iter_mut().zip(&quality) {
                if *ok != Some(filter.accept) {
                    *v = None;
                }
            }
        }
    }

    let stream = SensorStream {
        device_id: device_id.to_string(),
        channels,
        timestamps_ms: timestamps,
        values,
        native_rate_hz: device.rate_hz,
        timestamp_source: device.source,
    };
    stream.check_shape()?;
    Ok(stream)
}

fn malformed(line: usize, reason: String) -> IngestError {
    IngestError::MalformedFile { line, reason }
}

/// Stable sort of samples by timestamp; channel values follow their samples.
pub fn sort_by_time(mut stream: SensorStream) -> SensorStream {
    if stream.is_sorted() {
        return stream;
    }
    let mut order: Vec<usize> = (0..stream.len()).collect();
    order.sort_by(|&a, &b| stream.timestamps_ms[a].total_cmp(&stream.timestamps_ms[b]));
    stream.timestamps_ms = order.iter().map(|&i| stream.timestamps_ms[i]).collect();
    for column in stream.values.iter_mut() {
        *column = order.iter().map(|&i| column[i]).collect();
    }
    stream
}

/// Spreads each run of samples sharing one packet timestamp `t` forward as
/// `t + j * 1000 / rate_hz`. Values are untouched.
///
/// A run that ends more than one sample period past the next packet's
/// timestamp is reported as [`Diagnostic::RateMismatch`]; it is not corrected.
pub fn expand_packet_timestamps(mut stream: SensorStream, rate_hz: f64) -> (SensorStream, Vec<Diagnostic>) {
    let period = 1000.0 / rate_hz;
    let n = stream.len();
    let mut diagnostics = Vec::new();
    let mut expanded = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let t = stream.timestamps_ms[start];
        let mut end = start + 1;
        while end < n && stream.timestamps_ms[end] == t {
            end += 1;
        }
        for j in 0..end - start {
            expanded.push(t + j as f64 * period);
        }
        if end < n {
            let last = *expanded.last().expect("run is non-empty");
            let overlap = last - stream.timestamps_ms[end];
            if overlap > period {
                diagnostics.push(Diagnostic::RateMismatch {
                    device_id: stream.device_id.clone(),
                    sample_index: end - 1,
                    overlap_ms: overlap,
                });
            }
        }
        start = end;
    }
    stream.timestamps_ms = expanded;
    (stream, diagnostics)
}

/// Emits a coverage-gap diagnostic when the stream does not reach both session
/// bounds within two sample periods.
pub fn check_coverage(stream: &SensorStream, session_start_ms: f64, session_end_ms: f64) -> Option<Diagnostic> {
    let tolerance = 2000.0 / stream.native_rate_hz;
    let (first, last) = match (stream.timestamps_ms.first(), stream.timestamps_ms.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => (f64::NAN, f64::NAN),
    };
    let covered = first <= session_start_ms + tolerance && last >= session_end_ms - tolerance;
    (!covered).then(|| Diagnostic::CoverageGap {
        device_id: stream.device_id.clone(),
        stream_start_ms: first,
        stream_end_ms: last,
        session_start_ms,
        session_end_ms,
    })
}
