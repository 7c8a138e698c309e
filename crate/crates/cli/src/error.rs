use std::fmt;

use cabinsim::array::ArrayError;
use cabinsim::dataset::DatasetError;
use cabinsim::metrics::MetricsError;
use cabinsim::scene::SceneError;
use cabinsim::wav::WavError;

/// Process exit codes.
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or a request the dataset cannot satisfy.
    Usage(String),
    /// Unreadable or unwritable files.
    Io(String),
    /// Validation found problems; the report was already printed.
    Findings(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Findings(_) => EXIT_FINDINGS,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn io(msg: impl fmt::Display) -> Self {
        CliError::Io(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Findings(n) => write!(f, "{n} findings"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<WavError> for CliError {
    fn from(e: WavError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ArrayError> for CliError {
    fn from(e: ArrayError) -> Self {
        match e {
            ArrayError::Io(_) => CliError::Io(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::MissingManifest(_)
            | DatasetError::MalformedManifest { .. }
            | DatasetError::InvalidManifest { .. }
            | DatasetError::DanglingReference(_)
            | DatasetError::SilentChannel { .. }
            | DatasetError::ChannelCount { .. }
            | DatasetError::Io { .. }
            | DatasetError::Wav(_) => CliError::Io(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Input { .. } => CliError::Io(e.to_string()),
            SceneError::Dataset(d) => d.into(),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Dataset(d) => d.into(),
            MetricsError::Scene(s) => s.into(),
            MetricsError::Csv(_) | MetricsError::Json(_) => CliError::Io(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}
