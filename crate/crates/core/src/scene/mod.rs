//! Scene synthesis: Y = S + A + N + V.

mod build;
mod recycle;
mod spec;

use thiserror::Error;

pub use build::{
    build_audio_program, build_noise, build_speech, build_ventilation, scenario_irs, stream_seed,
    synthesize, Gains, Levels, SceneReport, SceneResult, SceneWarning,
};
pub(crate) use build::render_speech;
pub use recycle::{crossfade_len, recycle, recycle_from, recycle_offset, RecycleMode, CROSSFADE_SECONDS};
pub use spec::{AudioInput, Component, Components, SceneSpec, DEFAULT_TARGET_RATE};

use crate::dataset::DatasetError;
use crate::dsp::DspError;
use crate::wav::WavError;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{message}")]
    InvalidParameter { param: &'static str, message: String },
    #[error("cannot read {param}: {source}")]
    Input {
        param: &'static str,
        #[source]
        source: WavError,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

impl SceneError {
    /// Scene parameter at fault, where one can be named.
    pub fn param(&self) -> Option<&'static str> {
        match self {
            SceneError::InvalidParameter { param, .. } | SceneError::Input { param, .. } => Some(param),
            SceneError::Dataset(DatasetError::MissingImpulseResponse { .. }) => Some("p"),
            SceneError::Dataset(DatasetError::NoAudioSystem(_)) => Some("La"),
            SceneError::Dataset(DatasetError::UnknownCar(_)) => Some("car"),
            SceneError::Dataset(DatasetError::UnknownSetup { .. }) => Some("setup"),
            SceneError::Dataset(DatasetError::MissingNoise { condition, .. }) => {
                Some(if condition.ventilation.is_some() { "l" } else { "s" })
            }
            _ => None,
        }
    }
}
