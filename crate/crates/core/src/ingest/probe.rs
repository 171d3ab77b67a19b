use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// A probe answer: a 1–5 attention-difficulty level, or `X` for an external
/// distraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeResponse {
    Level(u8),
    Excluded,
}

impl ProbeResponse {
    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "X" | "x" => Some(ProbeResponse::Excluded),
            t => t.parse::<u8>().ok().filter(|v| (1..=5).contains(v)).map(ProbeResponse::Level),
        }
    }

    pub fn level(self) -> Option<u8> {
        match self {
            ProbeResponse::Level(v) => Some(v),
            ProbeResponse::Excluded => None,
        }
    }

    pub fn token(self) -> String {
        match self {
            ProbeResponse::Level(v) => v.to_string(),
            ProbeResponse::Excluded => "X".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub participant_id: String,
    pub session_id: String,
    pub video_id: String,
    pub video_time_s: f64,
    pub wall_clock_ms: f64,
    pub response: ProbeResponse,
}

pub fn parse_probe_log(path: &Path) -> Result<Vec<ProbeRecord>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    read_probe_log(std::io::BufReader::new(file))
}

const PROBE_HEADER: [&str; 6] = ["participant_id", "session_id", "video_id", "video_time_s", "wall_clock_ms", "response"];

/// Reads a probe log; records come back sorted by wall clock (stable).
pub fn read_probe_log<R: Read>(reader: R) -> Result<Vec<ProbeRecord>, IngestError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().ne(PROBE_HEADER.iter().copied()) {
        return Err(malformed(1, format!("expected header `{}`", PROBE_HEADER.join(","))));
    }
    let mut records = Vec::new();
    for row in csv.records() {
        let row = row.map_err(|e| malformed(0, e.to_string()))?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != PROBE_HEADER.len() {
            return Err(malformed(line, format!("expected 6 fields, found {}", row.len())));
        }
        let number = |i: usize| {
            row[i].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| malformed(line, format!("bad {} `{}`", PROBE_HEADER[i], &row[i])))
        };
        let video_time_s = number(3)?;
        let wall_clock_ms = number(4)?;
        if video_time_s < 0.0 || wall_clock_ms <= 0.0 {
            return Err(malformed(line, "negative video time or non-positive wall clock".into()));
        }
        let response = ProbeResponse::parse(&row[5])
            .ok_or_else(|| IngestError::InvalidResponse { line, token: row[5].to_string() })?;
        records.push(ProbeRecord {
            participant_id: row[0].to_string(),
            session_id: row[1].to_string(),
            video_id: row[2].to_string(),
            video_time_s,
            wall_clock_ms,
            response,
        });
    }
    records.sort_by(|a, b| a.wall_clock_ms.total_cmp(&b.wall_clock_ms));
    Ok(records)
}

fn malformed(line: usize, reason: String) -> IngestError {
    IngestError::MalformedFile { line, reason }
}
