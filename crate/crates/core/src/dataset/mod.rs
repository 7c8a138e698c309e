//! Dataset layout, loading, validation, calibration and a synthetic fixture.

mod calibrate;
pub(crate) mod fixture;
mod index;
pub mod manifest;
mod types;
mod validate;

use std::path::PathBuf;

use thiserror::Error;

pub use calibrate::{estimate_sensitivity, update_manifest_sensitivity};
pub use fixture::{generate_fixture, generate_fixture_with, FixtureConfig, FIXTURE_CAR};
pub use index::{
    load_dataset, Car, DatasetIndex, ImpulseResponseSet, IrEntry, NoiseClip, NoiseEntry, Setup,
};
pub use manifest::{Manifest, MANIFEST_FILE};
pub use types::{Condition, NoiseCondition, SetupKind, SourcePosition, VentLevel, WindowState};
pub use validate::{validate, validate_with, Finding, ValidationOptions, ValidationReport};

use crate::array::ArrayError;
use crate::dsp::DspError;
use crate::wav::WavError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing manifest: {0}")]
    MissingManifest(PathBuf),
    #[error("malformed manifest {path}: {source}")]
    MalformedManifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid manifest {path}: {detail}")]
    InvalidManifest { path: PathBuf, detail: String },
    #[error("dangling file reference: {0}")]
    DanglingReference(PathBuf),
    #[error("duplicate catalog key {key} in {car}/{setup}")]
    DuplicateKey { car: String, setup: SetupKind, key: String },
    #[error("unknown car `{0}`")]
    UnknownCar(String),
    #[error("car `{car}` has no {setup} setup")]
    UnknownSetup { car: String, setup: SetupKind },
    #[error("no impulse response for p={position}, w={window} (available: {available})")]
    MissingImpulseResponse {
        position: SourcePosition,
        window: WindowState,
        available: String,
    },
    #[error("no noise recording for {condition} (available: {available})")]
    MissingNoise { condition: Condition, available: String },
    #[error("no audio system in car `{0}`")]
    NoAudioSystem(String),
    #[error("{path}: channel {channel} is all zeros")]
    SilentChannel { path: PathBuf, channel: usize },
    #[error("{path}: expected {expected} channels, found {found}")]
    ChannelCount { path: PathBuf, expected: usize, found: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Array(#[from] ArrayError),
}
