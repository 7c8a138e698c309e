use std::fs;
use std::path::Path;

use serde_json::Value;

use super::manifest::MANIFEST_FILE;
use super::types::SetupKind;
use super::DatasetError;
use crate::dsp::{a_weighted_level_db, AudioBuffer, DspError};

/// Sensitivity offset that maps the A-weighted digital level of `channel` in
/// a pink-noise calibration capture onto the co-located meter reading.
pub fn estimate_sensitivity(
    calib_recording: &AudioBuffer<f64>,
    channel: usize,
    reference_dba: f64,
) -> Result<f64, DspError> {
    Ok(reference_dba - a_weighted_level_db(calib_recording, channel)?)
}

/// Rewrites one sensitivity entry of the manifest under `root`, leaving the
/// rest of the document as it was (key order and formatting of a
/// pretty-printed manifest are kept).
pub fn update_manifest_sensitivity(
    root: impl AsRef<Path>,
    car: &str,
    setup: SetupKind,
    channel: usize,
    offset: f64,
) -> Result<(), DatasetError> {
    let path = root.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => DatasetError::MissingManifest(path.clone()),
        _ => DatasetError::Io { path: path.clone(), source },
    })?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|source| DatasetError::MalformedManifest { path: path.clone(), source })?;
    let invalid = |detail: &str| DatasetError::InvalidManifest { path: path.clone(), detail: detail.into() };

    let car_entry = doc
        .get_mut("cars")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| invalid("no cars array"))?
        .iter_mut()
        .find(|c| c.get("id").and_then(Value::as_str) == Some(car))
        .ok_or_else(|| DatasetError::UnknownCar(car.to_string()))?;
    let setup_entry = car_entry
        .get_mut("setups")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| invalid("car has no setups array"))?
        .iter_mut()
        .find(|s| s.get("kind").and_then(Value::as_str) == Some(setup.as_str()))
        .ok_or_else(|| DatasetError::UnknownSetup { car: car.to_string(), setup })?;
    let offsets = setup_entry
        .get_mut("sensitivity")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| invalid("setup has no sensitivity array"))?;
    let available = offsets.len();
    let slot = offsets
        .get_mut(channel)
        .ok_or(DatasetError::Dsp(DspError::ChannelOutOfRange { channel, available }))?;
    *slot = serde_json::Number::from_f64(offset)
        .map(Value::Number)
        .ok_or_else(|| invalid("sensitivity offset must be finite"))?;

    let mut out = serde_json::to_string_pretty(&doc).expect("manifest serializes");
    if text.ends_with('\n') {
        out.push('\n');
    }
    fs::write(&path, out).map_err(|source| DatasetError::Io { path, source })
}
