//! Probe-aligned windows, channel standardization and participant-grouped folds.

mod channels;
mod folds;
mod stats;
mod store;
mod window;

pub use channels::{ChannelDescriptor, ChannelSpec, ModalityGroup, VIDEO_PROGRESS_CHANNEL};
pub use folds::{make_folds, make_folds_from_labels, FoldSplit, MAX_SPLIT_ATTEMPTS};
pub use stats::{fit_channel_stats, standardize, ChannelStats, FoldTag, STD_FLOOR};
pub use store::{read_window_store, write_window_store, StatsProvenance, WindowEntry, WindowStoreManifest};
pub use window::{
    assemble_windows, build_window, compute_video_progress, resample_channel, window_span, AssembledWindows, WindowAnchor,
    WindowConfig, WindowSample, WindowSpan,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("probe was excluded (X response); filter it before windowing")]
    ExcludedProbe,
    #[error("video has no probe times")]
    EmptyVideo,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("label {0} outside 1..5")]
    OutOfRange(u8),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("transform fitted for {fitted:?} applied to {requested:?}")]
    FoldMismatch { fitted: FoldTag, requested: FoldTag },
    #[error("window store: {0}")]
    Store(String),
}

/// Low: labels 1–2, High: labels 3–5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryClass {
    Low,
    High,
}

pub fn rebin_binary(label: u8) -> Result<BinaryClass, DatasetError> {
    match label {
        1 | 2 => Ok(BinaryClass::Low),
        3..=5 => Ok(BinaryClass::High),
        other => Err(DatasetError::OutOfRange(other)),
    }
}
