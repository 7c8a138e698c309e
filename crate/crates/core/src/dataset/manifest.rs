//! On-disk manifest schema (`manifest.json` at the dataset root).

use serde::{Deserialize, Serialize};

use super::types::{Condition, NoiseCondition, SetupKind, SourcePosition, WindowState};
use crate::dsp::SensitivityMap;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub cars: Vec<CarManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarManifest {
    pub id: String,
    pub brand: String,
    pub model: String,
    pub year: u16,
    /// Whether the car has a built-in audio system with measured IRs.
    pub audio_system: bool,
    /// Driving speeds in km/h covered by noise recordings; 0 is idle.
    pub speed_grid: Vec<u32>,
    pub ventilation_levels: Vec<u8>,
    pub window_states: Vec<WindowState>,
    /// Grid combinations that were not feasible to record.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unavailable: Vec<Condition>,
    pub setups: Vec<SetupManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupManifest {
    pub kind: SetupKind,
    pub channel_count: usize,
    /// Zero-based index of the microphone used for reported levels.
    pub reference_channel: usize,
    /// Nominal rate of the recordings; 48 kHz originals are also accepted.
    pub sample_rate: u32,
    pub sensitivity: SensitivityMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryManifest>,
    /// Passenger positions for which speech IRs were measured.
    pub source_positions: Vec<SourcePosition>,
    pub impulse_responses: Vec<IrManifest>,
    pub noise: Vec<NoiseManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryManifest {
    /// Microphone coordinates in metres, one per channel.
    pub mic_positions: Vec<[f64; 3]>,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
}

fn default_speed_of_sound() -> f64 {
    crate::array::DEFAULT_SPEED_OF_SOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrManifest {
    pub position: SourcePosition,
    pub window: WindowState,
    /// Level of the measurement source in dBA at 1 m.
    pub calibration_level: f64,
    /// A-weighted active level (dBFS) of a dry signal that, convolved with
    /// this IR, reproduces the source at `calibration_level`.
    pub source_level_dbfs: f64,
    /// Path relative to the dataset root.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseManifest {
    #[serde(flatten)]
    pub condition: NoiseCondition,
    pub window: WindowState,
    pub file: String,
}
