//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("nothing to transmit")]
    EmptyPayload,

    #[error("truncated frame: {got} bits is not a multiple of {frame_len}")]
    TruncatedFrame { got: usize, frame_len: usize },

    #[error("preamble mismatch at frame {0}")]
    PreambleMismatch(usize),

    #[error("invalid bit character {0:?} (expected '0' or '1')")]
    InvalidBitChar(char),

    #[error("malformed schedule: segment {index} ({duration_s} s, carrier {on}) matches neither symbol duration")]
    MalformedSchedule {
        index: usize,
        duration_s: f64,
        on: bool,
    },

    #[error("rate undefined for asymmetric timing (t0={t0_s} s, t1={t1_s} s)")]
    AsymmetricRate { t0_s: f64, t1_s: f64 },

    #[error("Nyquist violation: sample rate {sample_rate_hz} Hz cannot represent content up to {required_hz} Hz")]
    NyquistViolation {
        sample_rate_hz: u32,
        required_hz: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("signal too short: need at least {need_s} s, got {got_s} s")]
    SignalTooShort { need_s: f64, got_s: f64 },

    #[error("invalid frequency band [{low_hz}, {high_hz}] Hz")]
    InvalidBand { low_hz: f64, high_hz: f64 },

    #[error("degenerate noise reference (zero magnitude sum in band)")]
    DegenerateNoiseReference,

    #[error("no carrier found")]
    NoCarrierFound,

    #[error("preamble not found")]
    PreambleNotFound,

    #[error("insufficient contrast: {contrast_db:.2} dB plateau/gap separation (need {need_db:.2} dB)")]
    InsufficientContrast { contrast_db: f64, need_db: f64 },

    #[error("unknown config key {0:?}")]
    UnknownConfigKey(String),

    #[error("bad config value for {key}: {value:?}")]
    BadConfigValue { key: String, value: String },

    #[error("seek backend error: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("WAV error: {0}")]
    Wav(String),
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        Error::Wav(e.to_string())
    }
}
