use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Ingest(#[from] gatefuse::ingest::IngestError),
    #[error(transparent)]
    Dataset(#[from] gatefuse::dataset::DatasetError),
    #[error(transparent)]
    Feature(#[from] gatefuse::features::FeatureError),
    #[error(transparent)]
    Model(#[from] gatefuse::model::ModelError),
    #[error(transparent)]
    Eval(#[from] gatefuse::evaluation::EvalError),
    #[error(transparent)]
    Synth(#[from] gatefuse::synth::SynthError),
}

impl CliError {
    /// Stable machine-readable code printed before the message.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Format { .. } => "format",
            CliError::Ingest(_) => "ingest",
            CliError::Dataset(_) => "dataset",
            CliError::Feature(_) => "features",
            CliError::Model(_) => "model",
            CliError::Eval(_) => "eval",
            CliError::Synth(_) => "synth",
        }
    }

    /// 2 for problems with the invocation itself, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}
