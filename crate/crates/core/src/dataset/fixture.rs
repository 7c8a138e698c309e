//! Deterministic miniature dataset: one synthetic car, both setups, eight
//! microphones, impulse responses for every seat and window state, a grid of
//! driving and ventilation noise and one annotated event.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::manifest::{
    CarManifest, GeometryManifest, IrManifest, Manifest, NoiseManifest, SetupManifest, FORMAT_VERSION,
    MANIFEST_FILE,
};
use super::types::{NoiseCondition, SetupKind, SourcePosition, VentLevel, WindowState};
use super::DatasetError;
use crate::array::DEFAULT_SPEED_OF_SOUND;
use crate::dsp::{a_weighted_level_db, AudioBuffer, SensitivityMap};
use crate::wav::{write_wav, WavFormat};

pub const FIXTURE_CAR: &str = "fixture";

/// Source effort the impulse responses are calibrated to (dBA at 1 m).
const CALIBRATION_LEVEL: f64 = 60.0;
/// Nominal channel sensitivity offset (dB).
const NOMINAL_OFFSET: f64 = 115.0;
/// Scale applied to stored IRs so direct paths below 1 m stay inside full scale.
const IR_SCALE: f64 = 0.25;
const ARRAY_CENTER: [f64; 3] = [0.55, 0.0, 0.95];
const ARRAY_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub seed: u64,
    pub sample_rate: u32,
    pub noise_seconds: f64,
    pub event_seconds: f64,
    pub ir_seconds: f64,
    /// Reverberation time of the synthetic reflections with windows closed.
    pub t60: f64,
    pub speed_grid: Vec<u32>,
    pub ventilation_levels: Vec<u8>,
}

impl FixtureConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            sample_rate: 16_000,
            noise_seconds: 5.0,
            event_seconds: 2.0,
            ir_seconds: 0.1,
            t60: 0.05,
            speed_grid: vec![0, 50, 70, 90, 110],
            ventilation_levels: vec![1, 2, 3],
        }
    }
}

/// Driving-noise level (dBA) at a microphone with zero channel deviation.
pub(crate) fn driving_level(speed: u32, window: WindowState) -> f64 {
    44.0 + 0.25 * speed as f64 + 2.5 * window.get() as f64
}

pub(crate) fn ventilation_level(level: VentLevel, window: WindowState) -> f64 {
    40.0 + 9.0 * level.get() as f64 + window.get() as f64
}

/// Writes the fixture with default settings.
pub fn generate_fixture(root: impl AsRef<Path>, seed: u64) -> Result<(), DatasetError> {
    generate_fixture_with(root, &FixtureConfig::new(seed))
}

pub fn generate_fixture_with(root: impl AsRef<Path>, config: &FixtureConfig) -> Result<(), DatasetError> {
    let root = root.as_ref();
    let windows: Vec<WindowState> = WindowState::ALL.to_vec();
    let vent_levels = config
        .ventilation_levels
        .iter()
        .map(|&l| VentLevel::new(l))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|detail| DatasetError::InvalidManifest { path: root.join(MANIFEST_FILE), detail })?;

    let mut setups = Vec::new();
    for kind in [SetupKind::Array, SetupKind::Distributed] {
        let mut gen = SetupGen::new(root, kind, config)?;
        gen.write_irs(&windows)?;
        gen.write_noise(&windows, &vent_levels)?;
        setups.push(gen.finish());
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        cars: vec![CarManifest {
            id: FIXTURE_CAR.into(),
            brand: "Synthetic".into(),
            model: "Fixture".into(),
            year: 2024,
            audio_system: true,
            speed_grid: config.speed_grid.clone(),
            ventilation_levels: config.ventilation_levels.clone(),
            window_states: windows,
            unavailable: Vec::new(),
            setups,
        }],
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|source| DatasetError::Io { path, source })
}

struct SetupGen<'a> {
    root: &'a Path,
    kind: SetupKind,
    config: &'a FixtureConfig,
    mics: Vec<[f64; 3]>,
    sensitivity: Vec<f64>,
    /// Fixed per-channel deviation of noise levels from the nominal value.
    noise_deviation: Vec<f64>,
    irs: Vec<IrManifest>,
    noise: Vec<NoiseManifest>,
}

impl<'a> SetupGen<'a> {
    fn new(root: &'a Path, kind: SetupKind, config: &'a FixtureConfig) -> Result<Self, DatasetError> {
        for sub in ["ir", "noise"] {
            let dir = root.join(kind.as_str()).join(sub);
            fs::create_dir_all(&dir).map_err(|source| DatasetError::Io { path: dir, source })?;
        }
        let mics = match kind {
            SetupKind::Array => (0..8)
                .map(|m| {
                    let phi = m as f64 * PI / 4.0;
                    [
                        ARRAY_CENTER[0] + ARRAY_RADIUS * phi.cos(),
                        ARRAY_CENTER[1] + ARRAY_RADIUS * phi.sin(),
                        ARRAY_CENTER[2],
                    ]
                })
                .collect(),
            SetupKind::Distributed => vec![
                [0.45, 0.50, 1.20],
                [0.50, 0.20, 1.25],
                [0.50, -0.20, 1.25],
                [0.45, -0.50, 1.20],
                [0.60, 0.10, 0.95],
                [0.60, -0.10, 0.95],
                [-0.85, 0.35, 1.25],
                [-0.85, -0.35, 1.25],
            ],
        };
        let mut rng = rng_for(config.seed, &format!("{kind}/calibration"));
        let sensitivity = (0..8).map(|_| NOMINAL_OFFSET + rng.random_range(-0.75..0.75)).collect();
        let noise_deviation = (0..8).map(|_| rng.random_range(-1.5..1.5)).collect();
        Ok(Self {
            root,
            kind,
            config,
            mics,
            sensitivity,
            noise_deviation,
            irs: Vec::new(),
            noise: Vec::new(),
        })
    }

    fn write(&self, rel: &str, buf: &AudioBuffer<f64>) -> Result<(), DatasetError> {
        write_wav(self.root.join(rel), buf, WavFormat::Pcm24)?;
        Ok(())
    }

    fn write_irs(&mut self, windows: &[WindowState]) -> Result<(), DatasetError> {
        let source_level_dbfs = CALIBRATION_LEVEL - NOMINAL_OFFSET - 20.0 * IR_SCALE.log10();
        for position in SourcePosition::ALL {
            for &w in windows {
                let label = format!("{}/ir/{position}_w{w}.wav", self.kind);
                let ir = self.impulse_response(position, w, &label);
                self.write(&label, &ir)?;
                self.irs.push(IrManifest {
                    position,
                    window: w,
                    calibration_level: CALIBRATION_LEVEL,
                    source_level_dbfs,
                    file: label,
                });
            }
        }
        Ok(())
    }

    /// Direct-path deltas from each emitter plus exponentially decaying
    /// Gaussian reflections. Opening windows shortens and weakens the tail.
    fn impulse_response(&self, position: SourcePosition, w: WindowState, label: &str) -> AudioBuffer<f64> {
        let fs = self.config.sample_rate as f64;
        let len = (self.config.ir_seconds * fs).round() as usize;
        let openness = w.get() as f64;
        let t60 = self.config.t60 * (1.0 - 0.1 * openness);
        let strength = 0.3 * (1.0 - 0.15 * openness);
        let emitters = emitters(position);
        let mut rng = rng_for(self.config.seed, label);

        let channels = self
            .mics
            .iter()
            .map(|mic| {
                let mut h = vec![0.0; len];
                let mut first = len;
                let mut direct_gain = 0.0f64;
                for (src, gain) in &emitters {
                    let d = distance(src, mic);
                    let delay = (d / DEFAULT_SPEED_OF_SOUND * fs).round() as usize;
                    h[delay] += IR_SCALE * gain / d;
                    first = first.min(delay);
                    direct_gain = direct_gain.max(IR_SCALE * gain / d);
                }
                for (n, v) in h.iter_mut().enumerate().skip(first + 1) {
                    let t = (n - first) as f64 / fs;
                    let decay = (-6.907_755 * t / t60).exp();
                    let g: f64 = rng.sample(StandardNormal);
                    *v += direct_gain * strength * decay * g;
                }
                h
            })
            .collect();
        AudioBuffer::new(self.config.sample_rate, channels).expect("finite IR")
    }

    fn write_noise(&mut self, windows: &[WindowState], levels: &[VentLevel]) -> Result<(), DatasetError> {
        let speeds = self.config.speed_grid.clone();
        for &w in windows {
            for &speed in &speeds {
                let label = format!("{}/noise/driving_s{speed}_w{w}.wav", self.kind);
                let raw = self.colored_noise(&label, Coloring::Driving);
                let clip = self.calibrate_noise(raw, driving_level(speed, w));
                self.write(&label, &clip)?;
                self.noise.push(NoiseManifest {
                    condition: NoiseCondition::Driving { speed },
                    window: w,
                    file: label,
                });
            }
        }
        for &w in windows {
            for &level in levels {
                let label = format!("{}/noise/ventilation_l{level}_w{w}.wav", self.kind);
                let raw = self.colored_noise(&label, Coloring::Ventilation);
                let clip = self.calibrate_noise(raw, ventilation_level(level, w));
                self.write(&label, &clip)?;
                self.noise.push(NoiseManifest {
                    condition: NoiseCondition::Ventilation { level },
                    window: w,
                    file: label,
                });
            }
        }
        let label = format!("{}/noise/event_horn.wav", self.kind);
        let horn = self.horn_event(&label);
        self.write(&label, &horn)?;
        self.noise.push(NoiseManifest {
            condition: NoiseCondition::Event { annotation: "horn of a passing vehicle".into() },
            window: WindowState::ALL[0],
            file: label,
        });
        Ok(())
    }

    /// Partially correlated noise: a component common to all microphones plus
    /// an independent one per microphone.
    fn colored_noise(&self, label: &str, coloring: Coloring) -> AudioBuffer<f64> {
        let fs = self.config.sample_rate as f64;
        let len = (self.config.noise_seconds * fs).round() as usize;
        let mut rng = rng_for(self.config.seed, label);
        let common = coloring.shape(white(&mut rng, len), fs);
        let channels = (0..self.mics.len())
            .map(|_| {
                let own = coloring.shape(white(&mut rng, len), fs);
                common.iter().zip(&own).map(|(c, o)| 0.7 * c + 0.7 * o).collect()
            })
            .collect();
        AudioBuffer::new(self.config.sample_rate, channels).expect("finite noise")
    }

    /// Scales each channel so its A-weighted level reads `target_dba` (plus
    /// the channel's fixed deviation) through the fixture sensitivities.
    fn calibrate_noise(&self, raw: AudioBuffer<f64>, target_dba: f64) -> AudioBuffer<f64> {
        let channels = (0..raw.channel_count())
            .map(|ch| {
                let digital = a_weighted_level_db(&raw, ch).expect("noise is not silent");
                let wanted = target_dba + self.noise_deviation[ch] - self.sensitivity[ch];
                let gain = 10f64.powf((wanted - digital) / 20.0);
                raw.channel(ch).unwrap().iter().map(|v| v * gain).collect()
            })
            .collect();
        AudioBuffer::new(raw.sample_rate(), channels).expect("finite noise")
    }

    fn horn_event(&self, label: &str) -> AudioBuffer<f64> {
        let fs = self.config.sample_rate as f64;
        let len = (self.config.event_seconds * fs).round() as usize;
        let mut rng = rng_for(self.config.seed, label);
        let (on, off) = (len / 4, 3 * len / 4);
        let channels = self
            .mics
            .iter()
            .map(|mic| {
                let gain = 0.02 / (1.0 + mic[1].abs());
                (0..len)
                    .map(|n| {
                        let t = n as f64 / fs;
                        let tone = if (on..off).contains(&n) {
                            (2.0 * PI * 400.0 * t).sin() + 0.6 * (2.0 * PI * 500.0 * t).sin()
                        } else {
                            0.0
                        };
                        let floor: f64 = rng.sample(StandardNormal);
                        gain * tone + 1e-3 * floor
                    })
                    .collect()
            })
            .collect();
        AudioBuffer::new(self.config.sample_rate, channels).expect("finite event")
    }

    fn finish(self) -> SetupManifest {
        let (reference_channel, geometry) = match self.kind {
            SetupKind::Array => (
                4,
                Some(GeometryManifest { mic_positions: self.mics.clone(), speed_of_sound: DEFAULT_SPEED_OF_SOUND }),
            ),
            SetupKind::Distributed => (2, None),
        };
        SetupManifest {
            kind: self.kind,
            channel_count: self.mics.len(),
            reference_channel,
            sample_rate: self.config.sample_rate,
            sensitivity: SensitivityMap::new(self.sensitivity).expect("finite offsets"),
            geometry,
            source_positions: SourcePosition::SEATS.to_vec(),
            impulse_responses: self.irs,
            noise: self.noise,
        }
    }
}

#[derive(Clone, Copy)]
enum Coloring {
    /// Pink noise through a first-order low-pass at 1 kHz.
    Driving,
    /// White noise band-limited to roughly 300 Hz - 3 kHz.
    Ventilation,
}

impl Coloring {
    fn shape(self, white: Vec<f64>, fs: f64) -> Vec<f64> {
        match self {
            Coloring::Driving => one_pole_lowpass(pink(white), 1000.0, fs),
            Coloring::Ventilation => one_pole_lowpass(one_pole_highpass(white, 300.0, fs), 3000.0, fs),
        }
    }
}

pub(crate) fn white(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Pinking filter (Kellet's economy three-pole approximation).
pub(crate) fn pink(white: Vec<f64>) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    white
        .into_iter()
        .map(|w| {
            b0 = 0.99765 * b0 + w * 0.099_046;
            b1 = 0.96300 * b1 + w * 0.296_516_4;
            b2 = 0.57000 * b2 + w * 1.052_691_3;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect()
}

fn one_pole_lowpass(x: Vec<f64>, cutoff: f64, fs: f64) -> Vec<f64> {
    let a = (-2.0 * PI * cutoff / fs).exp();
    let mut y = 0.0;
    x.into_iter()
        .map(|v| {
            y = (1.0 - a) * v + a * y;
            y
        })
        .collect()
}

fn one_pole_highpass(x: Vec<f64>, cutoff: f64, fs: f64) -> Vec<f64> {
    let a = (-2.0 * PI * cutoff / fs).exp();
    let (mut y, mut prev) = (0.0, 0.0);
    x.into_iter()
        .map(|v| {
            y = a * (y + v - prev);
            prev = v;
            y
        })
        .collect()
}

/// Cabin coordinates (x forward, y left, z up, metres) and gains of the
/// emitters making up a source position.
fn emitters(position: SourcePosition) -> Vec<([f64; 3], f64)> {
    match position {
        SourcePosition::Driver => vec![([0.0, 0.37, 1.10], 1.0)],
        SourcePosition::FrontPassenger => vec![([0.0, -0.37, 1.10], 1.0)],
        SourcePosition::RearLeft => vec![([-0.95, 0.40, 1.05], 1.0)],
        SourcePosition::RearMiddle => vec![([-0.95, 0.0, 1.05], 1.0)],
        SourcePosition::RearRight => vec![([-0.95, -0.40, 1.05], 1.0)],
        SourcePosition::AudioSystem => vec![
            ([0.30, 0.75, 0.50], 0.5),
            ([0.30, -0.75, 0.50], 0.5),
            ([-0.70, 0.75, 0.50], 0.5),
            ([-0.70, -0.75, 0.50], 0.5),
        ],
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Independent generator per file, so output does not depend on write order.
fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a
    let hash = label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ hash)
}
