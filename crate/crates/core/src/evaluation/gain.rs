use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::numeric::mean;

/// Pre/post quiz scores (0–5) of one participant on one video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizRecord {
    pub participant_id: String,
    pub video_id: String,
    pub pre: u8,
    pub post: u8,
}

/// `(post − pre) / (5 − pre)`; a perfect pre-test leaves nothing to gain and
/// is excluded.
pub fn normalized_gain(pre: u8, post: u8) -> Result<f64, EvalError> {
    if pre > 5 || post > 5 {
        return Err(EvalError::Format(format!("quiz scores must lie in 0..5, got pre {pre}, post {post}")));
    }
    if pre == 5 {
        return Err(EvalError::ExcludedRecord { pre });
    }
    Ok((f64::from(post) - f64::from(pre)) / (5.0 - f64::from(pre)))
}

/// Sample Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoGain {
    pub video_id: String,
    pub mean_difficulty: f64,
    pub mean_gain: f64,
    pub n_gain: usize,
    pub n_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCorrelation {
    pub r: f64,
    pub n: usize,
    /// Quiz records dropped because the pre-test was already perfect.
    pub excluded: usize,
    pub videos: Vec<VideoGain>,
}

/// Pearson r between per-video mean attention difficulty (over windows) and
/// per-video mean normalized gain (over participants).
pub fn gain_correlation(quiz: &[QuizRecord], difficulty: &[(String, u8)]) -> Result<GainCorrelation, EvalError> {
    let mut gains: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut excluded = 0;
    for q in quiz {
        match normalized_gain(q.pre, q.post) {
            Ok(g) => gains.entry(q.video_id.as_str()).or_default().push(g),
            Err(EvalError::ExcludedRecord { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let mut labels: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (video, label) in difficulty {
        labels.entry(video.as_str()).or_default().push(f64::from(*label));
    }
    let videos: Vec<VideoGain> = gains
        .iter()
        .filter_map(|(v, g)| {
            labels.get(v).map(|l| VideoGain { video_id: v.to_string(), mean_difficulty: mean(l), mean_gain: mean(g), n_gain: g.len(), n_windows: l.len() })
        })
        .collect();
    if videos.len() < 3 {
        return Err(EvalError::InsufficientVideos(videos.len()));
    }
    let x: Vec<f64> = videos.iter().map(|v| v.mean_difficulty).collect();
    let y: Vec<f64> = videos.iter().map(|v| v.mean_gain).collect();
    let r = pearson(&x, &y).ok_or_else(|| EvalError::Format("per-video means have zero variance".into()))?;
    Ok(GainCorrelation { r, n: videos.len(), excluded, videos })
}

/// CSV `participant_id,video_id,pre,post`.
pub fn read_quiz_csv<R: Read>(input: R) -> Result<Vec<QuizRecord>, EvalError> {
    let mut csv = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (line, rec) in csv.deserialize::<QuizRecord>().enumerate() {
        let rec = rec.map_err(|e| EvalError::Format(format!("quiz line {}: {e}", line + 2)))?;
        if rec.pre > 5 || rec.post > 5 {
            return Err(EvalError::Format(format!("quiz line {}: scores must lie in 0..5", line + 2)));
        }
        out.push(rec);
    }
    Ok(out)
}
