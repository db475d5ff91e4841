use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("noise segment is silent (zero RMS)")]
    SilentNoise,

    #[error("malformed WAV file {path}: {reason}")]
    MalformedWav { path: PathBuf, reason: String },

    #[error("WAV file {path} has {channels} channels, expected mono")]
    ChannelCount { path: PathBuf, channels: u16 },

    #[error("WAV file {path} contains no samples")]
    EmptyWav { path: PathBuf },

    #[error("unsupported WAV encoding in {path}: {reason}")]
    UnsupportedEncoding { path: PathBuf, reason: String },

    #[error("malformed metadata {path}: {reason}")]
    Metadata { path: PathBuf, reason: String },

    #[error("checksum mismatch for {path}")]
    ChecksumMismatch { path: PathBuf },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("no active examples in phase {phase} (threshold {threshold_db} dB)")]
    EmptyActiveSet { phase: usize, threshold_db: f64 },

    #[error("SNR bin {0} dB has no trials")]
    EmptyBin(f64),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 config error, 2 data error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 1,
            Error::NonFinite(_) | Error::EmptyActiveSet { .. } => 3,
            _ => 2,
        }
    }
}
