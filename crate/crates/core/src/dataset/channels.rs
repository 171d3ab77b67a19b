use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One row of the window tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDescriptor {
    pub name: String,
    /// Stream file the row is resampled from; empty for the metadata row.
    pub device_id: String,
    /// Column name inside that stream file.
    pub stream_channel: String,
    /// Index into [`ChannelSpec::modalities`]; `None` for the metadata row.
    pub modality: Option<usize>,
    pub native_rate_hz: f64,
}

/// A removable sensing stream: a named group of tensor rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityGroup {
    pub key: String,
    pub display_name: String,
    pub channels: Vec<usize>,
}

/// Canonical tensor layout: sensor rows grouped into modalities, plus one
/// video-progress metadata row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub channels: Vec<ChannelDescriptor>,
    pub modalities: Vec<ModalityGroup>,
    pub metadata_channel: usize,
}

struct DeviceLayout {
    device: &'static str,
    rate_hz: f64,
    groups: &'static [(&'static str, &'static str, &'static [&'static str])],
}

const IMU_AXES: [&str; 6] = ["acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"];

const LAYOUT: &[DeviceLayout] = &[
    DeviceLayout { device: "beam_gaze", rate_hz: 30.0, groups: &[("eye_gaze", "Eye tracking", &["gaze_x", "gaze_y"])] },
    DeviceLayout { device: "beam_head", rate_hz: 30.0, groups: &[("head_pose", "Head pose", &["head_x", "head_y", "head_z"])] },
    DeviceLayout { device: "band_eda", rate_hz: 5.0, groups: &[("eda", "EDA", &["eda_kohm"])] },
    DeviceLayout { device: "band_hr", rate_hz: 2.0, groups: &[("hr", "HR", &["hr_bpm"])] },
    DeviceLayout { device: "muse_ppg", rate_hz: 64.0, groups: &[("muse_ppg", "Muse PPG", &["ppg_730_left_outer"])] },
    DeviceLayout {
        device: "ring",
        rate_hz: 25.0,
        groups: &[
            ("ring_ppg", "Ring PPG", &["ppg_green"]),
            ("ring_temp", "Ring Temperature", &["temp_inner_left", "temp_inner_right", "temp_outer"]),
        ],
    },
    DeviceLayout { device: "esense", rate_hz: 50.0, groups: &[("esense_imu", "Esense IMU", &IMU_AXES)] },
    DeviceLayout { device: "polar", rate_hz: 130.0, groups: &[("ecg", "ECG", &["ecg_uv"])] },
    DeviceLayout { device: "muse_imu", rate_hz: 52.0, groups: &[("muse_imu", "Muse IMU", &IMU_AXES)] },
    DeviceLayout { device: "muse_eeg", rate_hz: 256.0, groups: &[("muse_eeg", "Muse EEG", &["eeg_af7", "eeg_af8"])] },
];

pub const VIDEO_PROGRESS_CHANNEL: &str = "video_progress";

impl ChannelSpec {
    /// The fixed 28-row layout: 27 sensor rows in 11 modalities, then video progress.
    pub fn canonical() -> Self {
        let mut channels = Vec::new();
        let mut modalities = Vec::new();
        for layout in LAYOUT {
            for (key, display, columns) in layout.groups {
                let m = modalities.len();
                let mut rows = Vec::new();
                for column in *columns {
                    rows.push(channels.len());
                    channels.push(ChannelDescriptor {
                        name: format!("{key}.{column}"),
                        device_id: layout.device.to_string(),
                        stream_channel: column.to_string(),
                        modality: Some(m),
                        native_rate_hz: layout.rate_hz,
                    });
                }
                modalities.push(ModalityGroup { key: key.to_string(), display_name: display.to_string(), channels: rows });
            }
        }
        let metadata_channel = channels.len();
        channels.push(ChannelDescriptor {
            name: VIDEO_PROGRESS_CHANNEL.into(),
            device_id: String::new(),
            stream_channel: String::new(),
            modality: None,
            native_rate_hz: 0.0,
        });
        ChannelSpec { channels, modalities, metadata_channel }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_modalities(&self) -> usize {
        self.modalities.len()
    }

    pub fn sensor_channels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.channels.len()).filter(move |&c| c != self.metadata_channel)
    }

    pub fn modality_index(&self, key: &str) -> Option<usize> {
        self.modalities.iter().position(|m| m.key == key || m.display_name == key)
    }

    /// Device ids in first-appearance order.
    pub fn devices(&self) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = Vec::new();
        for c in &self.channels {
            if !c.device_id.is_empty() && !out.iter().any(|(d, _)| *d == c.device_id) {
                out.push((&c.device_id, c.native_rate_hz));
            }
        }
        out
    }

    /// Stream columns expected in a device file, in tensor order.
    pub fn device_columns(&self, device_id: &str) -> Vec<&str> {
        self.channels.iter().filter(|c| c.device_id == device_id).map(|c| c.stream_channel.as_str()).collect()
    }

    /// Stable content hash, embedded in checkpoints and window stores.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("channel spec serializes");
        hex::encode(&Sha256::digest(&bytes)[..16])
    }
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self::canonical()
    }
}
