use std::borrow::Cow;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::dataset::{Car, DatasetIndex, Setup, SetupKind, SourcePosition, VentLevel, WindowState};
use crate::dsp::{AudioBuffer, MIN_WEIGHTING_RATE};
use crate::wav::read_wav;

pub const DEFAULT_TARGET_RATE: u32 = 16_000;

/// A signal given either as a WAV path or as an in-memory buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AudioInput {
    Path(PathBuf),
    #[serde(skip)]
    Buffer(AudioBuffer<f64>),
}

impl AudioInput {
    pub fn load(&self) -> Result<Cow<'_, AudioBuffer<f64>>, crate::wav::WavError> {
        match self {
            AudioInput::Path(path) => read_wav(path).map(Cow::Owned),
            AudioInput::Buffer(buf) => Ok(Cow::Borrowed(buf)),
        }
    }

    /// Resolve a relative path against `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let AudioInput::Path(path) = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

impl From<AudioBuffer<f64>> for AudioInput {
    fn from(buf: AudioBuffer<f64>) -> Self {
        AudioInput::Buffer(buf)
    }
}

impl From<PathBuf> for AudioInput {
    fn from(path: PathBuf) -> Self {
        AudioInput::Path(path)
    }
}

impl From<&Path> for AudioInput {
    fn from(path: &Path) -> Self {
        AudioInput::Path(path.to_path_buf())
    }
}

/// The four addends of a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Speech,
    AudioProgram,
    Noise,
    Ventilation,
}

impl Component {
    pub const ALL: [Component; 4] =
        [Component::Speech, Component::AudioProgram, Component::Noise, Component::Ventilation];

    /// Short symbol used in file names.
    pub fn symbol(self) -> &'static str {
        match self {
            Component::Speech => "S",
            Component::AudioProgram => "A",
            Component::Noise => "N",
            Component::Ventilation => "V",
        }
    }
}

/// Which components are rendered; disabled ones come out as zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Components {
    pub speech: bool,
    pub audio_program: bool,
    pub noise: bool,
    pub ventilation: bool,
}

impl Default for Components {
    fn default() -> Self {
        Components::ALL
    }
}

impl Components {
    pub const ALL: Components = Components { speech: true, audio_program: true, noise: true, ventilation: true };
    pub const NONE: Components = Components { speech: false, audio_program: false, noise: false, ventilation: false };

    pub fn only(component: Component) -> Self {
        let mut c = Components::NONE;
        c.set(component, true);
        c
    }

    pub fn is_all(&self) -> bool {
        *self == Components::ALL
    }

    pub fn contains(&self, component: Component) -> bool {
        match component {
            Component::Speech => self.speech,
            Component::AudioProgram => self.audio_program,
            Component::Noise => self.noise,
            Component::Ventilation => self.ventilation,
        }
    }

    pub fn set(&mut self, component: Component, on: bool) {
        match component {
            Component::Speech => self.speech = on,
            Component::AudioProgram => self.audio_program = on,
            Component::Noise => self.noise = on,
            Component::Ventilation => self.ventilation = on,
        }
    }
}

fn default_target_rate() -> u32 {
    DEFAULT_TARGET_RATE
}

/// Full parameter set of one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub car: String,
    pub setup: SetupKind,
    /// Talker position.
    pub p: SourcePosition,
    /// Speech effort in dBA at 1 m.
    #[serde(rename = "Ls")]
    pub ls: f64,
    /// Window state, 0..=3.
    pub w: u8,
    /// Dry mono speech.
    pub x: AudioInput,
    /// Audio-program level in dBA at the reference microphone.
    #[serde(rename = "La", default, skip_serializing_if = "Option::is_none")]
    pub la: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<AudioInput>,
    /// Speed in km/h.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
    /// Ventilation level, 1..=3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u8>,
    /// Microphone indices, in output order. All when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<usize>>,
    #[serde(default = "default_target_rate")]
    pub target_rate: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Components::is_all")]
    pub components: Components,
}

impl SceneSpec {
    pub fn new(
        car: impl Into<String>,
        setup: SetupKind,
        p: SourcePosition,
        ls: f64,
        w: u8,
        x: impl Into<AudioInput>,
    ) -> Self {
        SceneSpec {
            car: car.into(),
            setup,
            p,
            ls,
            w,
            x: x.into(),
            la: None,
            z: None,
            s: None,
            l: None,
            channels: None,
            target_rate: DEFAULT_TARGET_RATE,
            seed: 0,
            components: Components::ALL,
        }
    }

    pub fn with_audio_program(mut self, la: f64, z: impl Into<AudioInput>) -> Self {
        self.la = Some(la);
        self.z = Some(z.into());
        self
    }

    pub fn with_speed(mut self, s: u32) -> Self {
        self.s = Some(s);
        self
    }

    pub fn with_ventilation(mut self, l: u8) -> Self {
        self.l = Some(l);
        self
    }

    pub fn with_channels(mut self, channels: Vec<usize>) -> Self {
        self.channels = Some(channels);
        self
    }

    pub fn with_target_rate(mut self, rate: u32) -> Self {
        self.target_rate = rate;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_components(mut self, components: Components) -> Self {
        self.components = components;
        self
    }

    /// Checks that need no dataset.
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.ls >= 0.0 && self.ls.is_finite()) {
            return Err(invalid("Ls", format!("Ls must be ≥ 0 dBA (got {})", self.ls)));
        }
        if let Some(la) = self.la {
            if !(la >= 0.0 && la.is_finite()) {
                return Err(invalid("La", format!("La must be ≥ 0 dBA (got {la})")));
            }
        }
        WindowState::new(self.w).map_err(|e| invalid("w", format!("{e} (got {})", self.w)))?;
        if let Some(l) = self.l {
            VentLevel::new(l).map_err(|e| invalid("l", format!("{e} (got {l})")))?;
        }
        match (self.la.is_some(), self.z.is_some()) {
            (true, false) => return Err(invalid("z", "z must be given when La is set")),
            (false, true) => return Err(invalid("La", "La must be given when z is set")),
            _ => {}
        }
        if self.p == SourcePosition::AudioSystem {
            return Err(invalid("p", "p must be a talker position, not audio_system"));
        }
        if self.target_rate < MIN_WEIGHTING_RATE {
            return Err(invalid(
                "target_rate",
                format!("target_rate must be ≥ {MIN_WEIGHTING_RATE} Hz (got {})", self.target_rate),
            ));
        }
        if let Some(channels) = &self.channels {
            if channels.is_empty() {
                return Err(invalid("channels", "channels must not be empty"));
            }
            for (i, c) in channels.iter().enumerate() {
                if channels[..i].contains(c) {
                    return Err(invalid("channels", format!("channels: microphone {c} listed twice")));
                }
            }
        }
        Ok(())
    }

    pub fn window(&self) -> WindowState {
        WindowState::new(self.w).expect("validated")
    }

    pub fn vent_level(&self) -> Option<VentLevel> {
        self.l.map(|l| VentLevel::new(l).expect("validated"))
    }

    /// Validate against `index` and look up the car and setup.
    pub(crate) fn resolve<'a>(&self, index: &'a DatasetIndex) -> Result<(&'a Car, &'a Setup), SceneError> {
        self.validate()?;
        let car = index.car(&self.car)?;
        let setup = car.setup(self.setup)?;
        if !car.window_states.contains(&self.window()) {
            return Err(invalid("w", format!("w={} is not recorded for car `{}`", self.w, car.id)));
        }
        if let Some(s) = self.s {
            if !car.speed_grid.contains(&s) {
                return Err(invalid(
                    "s",
                    format!("s={s} km/h is not in the speed grid of car `{}` ({})", car.id, join(&car.speed_grid)),
                ));
            }
        }
        if let Some(l) = self.vent_level() {
            if !car.ventilation_levels.contains(&l) {
                return Err(invalid(
                    "l",
                    format!("l={l} is not a ventilation level of car `{}` ({})", car.id, join(&car.ventilation_levels)),
                ));
            }
        }
        if self.la.is_some() && !car.audio_system {
            return Err(crate::dataset::DatasetError::NoAudioSystem(car.id.clone()).into());
        }
        if let Some(channels) = &self.channels {
            if let Some(&c) = channels.iter().find(|&&c| c >= setup.channel_count()) {
                return Err(invalid(
                    "channels",
                    format!("channels: microphone {c} out of range (setup has {})", setup.channel_count()),
                ));
            }
        }
        Ok((car, setup))
    }

    /// Selected microphone indices.
    pub fn selected_channels(&self, setup: &Setup) -> Vec<usize> {
        self.channels.clone().unwrap_or_else(|| (0..setup.channel_count()).collect())
    }
}

fn invalid(param: &'static str, message: impl Into<String>) -> SceneError {
    SceneError::InvalidParameter { param, message: message.into() }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}
