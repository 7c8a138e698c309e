use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::index::{Car, DatasetIndex, Setup};
use super::types::{Condition, NoiseCondition, SetupKind, SourcePosition, WindowState};
use crate::dsp::AudioBuffer;
use crate::wav::{read_info, read_wav};

/// Rate accepted in addition to a setup's nominal rate (original recordings).
const ORIGINAL_RATE: u32 = 48_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOptions {
    /// Consecutive full-scale samples that count as clipping.
    pub clip_min_run: usize,
    /// Absolute amplitude treated as full scale. `None` uses the largest code
    /// of each file's own encoding.
    pub clip_threshold: Option<f64>,
    /// Minimum length of driving and ventilation clips, in seconds.
    pub min_stationary_secs: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { clip_min_run: 3, clip_threshold: None, min_stationary_secs: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum Finding {
    MissingImpulseResponse { car: String, setup: SetupKind, position: SourcePosition, window: WindowState },
    MissingNoise { car: String, setup: SetupKind, condition: Condition },
    FormatMismatch { path: PathBuf, detail: String },
    Clipping { path: PathBuf, channel: usize, first_sample: usize, runs: usize },
    ShortClip { path: PathBuf, seconds: f64 },
    SilentChannel { path: PathBuf, channel: usize },
    Unreadable { path: PathBuf, detail: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::MissingImpulseResponse { car, setup, position, window } => {
                write!(f, "{car}/{setup}: missing impulse response p={position}, w={window}")
            }
            Finding::MissingNoise { car, setup, condition } => {
                write!(f, "{car}/{setup}: missing noise recording {condition}")
            }
            Finding::FormatMismatch { path, detail } => write!(f, "{}: {detail}", path.display()),
            Finding::Clipping { path, channel, first_sample, runs } => write!(
                f,
                "{}: channel {channel} clips ({runs} run(s), first at sample {first_sample})",
                path.display()
            ),
            Finding::ShortClip { path, seconds } => {
                write!(f, "{}: stationary clip is only {seconds:.2} s", path.display())
            }
            Finding::SilentChannel { path, channel } => {
                write!(f, "{}: channel {channel} is all zeros", path.display())
            }
            Finding::Unreadable { path, detail } => write!(f, "{}: {detail}", path.display()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }
}

/// Checks coverage and audio integrity with default options.
pub fn validate(index: &DatasetIndex) -> ValidationReport {
    validate_with(index, &ValidationOptions::default())
}

/// Reports missing (p, w) impulse responses, missing grid noise recordings,
/// rate/channel mismatches, short stationary clips, silent IR channels and
/// clipped runs. Files are decoded independently of the index's cache.
pub fn validate_with(index: &DatasetIndex, options: &ValidationOptions) -> ValidationReport {
    let mut findings = Vec::new();
    for car in index.cars() {
        for setup in car.setups() {
            coverage(car, setup, &mut findings);
            for ir in setup.impulse_responses() {
                check_file(setup, ir.path(), FileRole::ImpulseResponse, options, &mut findings);
            }
            for clip in setup.noise() {
                let role = match clip.condition() {
                    NoiseCondition::Event { .. } => FileRole::Event,
                    _ => FileRole::Stationary,
                };
                check_file(setup, clip.path(), role, options, &mut findings);
            }
        }
    }
    ValidationReport { findings }
}

fn coverage(car: &Car, setup: &Setup, findings: &mut Vec<Finding>) {
    let mut positions = setup.source_positions().to_vec();
    if car.audio_system && !positions.contains(&SourcePosition::AudioSystem) {
        positions.push(SourcePosition::AudioSystem);
    }
    for &position in &positions {
        for &window in &car.window_states {
            if setup.impulse_response(position, window).is_none() {
                findings.push(Finding::MissingImpulseResponse {
                    car: car.id.clone(),
                    setup: setup.kind(),
                    position,
                    window,
                });
            }
        }
    }
    for condition in car.condition_grid() {
        if !car.is_unavailable(&condition) && setup.noise_for(&condition).is_none() {
            findings.push(Finding::MissingNoise { car: car.id.clone(), setup: setup.kind(), condition });
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum FileRole {
    ImpulseResponse,
    Stationary,
    Event,
}

fn check_file(setup: &Setup, path: &Path, role: FileRole, options: &ValidationOptions, findings: &mut Vec<Finding>) {
    let info = match read_info(path) {
        Ok(info) => info,
        Err(e) => {
            findings.push(Finding::Unreadable { path: path.into(), detail: e.to_string() });
            return;
        }
    };
    if info.sample_rate != setup.sample_rate() && info.sample_rate != ORIGINAL_RATE {
        findings.push(Finding::FormatMismatch {
            path: path.into(),
            detail: format!(
                "sample rate {} Hz, setup declares {} Hz",
                info.sample_rate,
                setup.sample_rate()
            ),
        });
    }
    if info.channels as usize != setup.channel_count() {
        findings.push(Finding::FormatMismatch {
            path: path.into(),
            detail: format!("{} channels, setup declares {}", info.channels, setup.channel_count()),
        });
    }
    if role == FileRole::Stationary {
        let seconds = info.frames as f64 / info.sample_rate as f64;
        if seconds < options.min_stationary_secs {
            findings.push(Finding::ShortClip { path: path.into(), seconds });
        }
    }

    let audio: AudioBuffer<f64> = match read_wav(path) {
        Ok(a) => a,
        Err(e) => {
            findings.push(Finding::Unreadable { path: path.into(), detail: e.to_string() });
            return;
        }
    };
    let threshold = options.clip_threshold.unwrap_or_else(|| info.full_scale());
    for (channel, samples) in audio.channels().iter().enumerate() {
        if role == FileRole::ImpulseResponse && samples.iter().all(|v| *v == 0.0) {
            findings.push(Finding::SilentChannel { path: path.into(), channel });
        }
        if let Some((first_sample, runs)) = clipped_runs(samples, threshold, options.clip_min_run) {
            findings.push(Finding::Clipping { path: path.into(), channel, first_sample, runs });
        }
    }
}

/// Start of the first run and number of runs of at least `min_run`
/// consecutive samples with `|x| >= threshold`.
fn clipped_runs(samples: &[f64], threshold: f64, min_run: usize) -> Option<(usize, usize)> {
    let min_run = min_run.max(1);
    let mut first = None;
    let mut runs = 0;
    let mut start = 0;
    let mut len = 0;
    for (i, v) in samples.iter().enumerate() {
        if v.abs() >= threshold {
            if len == 0 {
                start = i;
            }
            len += 1;
            if len == min_run {
                runs += 1;
                first.get_or_insert(start);
            }
        } else {
            len = 0;
        }
    }
    first.map(|f| (f, runs))
}

#[cfg(test)]
mod tests {
    use super::clipped_runs;

    #[test]
    fn run_detection() {
        let mut x = vec![0.0; 100];
        assert_eq!(clipped_runs(&x, 1.0, 3), None);
        x[10] = 1.0;
        x[11] = -1.0;
        assert_eq!(clipped_runs(&x, 1.0, 3), None);
        x[12] = 1.0;
        assert_eq!(clipped_runs(&x, 1.0, 3), Some((10, 1)));
        for v in &mut x[50..60] {
            *v = 1.0;
        }
        assert_eq!(clipped_runs(&x, 1.0, 3), Some((10, 2)));
        assert_eq!(clipped_runs(&x, 1.0, 11), None);
    }
}
