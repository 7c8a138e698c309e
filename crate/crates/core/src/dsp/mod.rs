//! Numeric kernels: buffers, sample-rate conversion, convolution,
//! A-weighting and equivalent-level metering.

mod buffer;
mod convolve;
mod level;
mod resample;
mod weighting;

pub use buffer::AudioBuffer;
pub use convolve::{convolve, FftConvolver};
pub use level::{
    active_speech_level_db, a_weighted_level_db, equivalent_level, rms_db, SensitivityMap,
    ACTIVE_FRAME_SECONDS, ACTIVE_THRESHOLD_DB,
};
pub use resample::{downmix, resample, Resampler};
pub use weighting::{a_weight, a_weighting_db, AWeightingFilter, MIN_WEIGHTING_RATE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("invalid buffer: {0}")]
    InvalidBuffer(String),
    #[error("empty input")]
    EmptyInput,
    #[error("rate mismatch: signal at {signal} Hz, impulse response at {ir} Hz")]
    RateMismatch { signal: u32, ir: u32 },
    #[error("convolution input must be mono, got {0} channels")]
    NotMono(usize),
    #[error("invalid sample rate {0} Hz")]
    InvalidRate(u32),
    #[error("unsupported sample rate {0} Hz for A-weighting (minimum {MIN_WEIGHTING_RATE} Hz)")]
    UnsupportedRate(u32),
    #[error("channel {channel} out of range ({available} available)")]
    ChannelOutOfRange { channel: usize, available: usize },
    #[error("silent signal")]
    SilentSignal,
}
