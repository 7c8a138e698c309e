use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Where a measured sound source sits in the cabin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePosition {
    Driver,
    FrontPassenger,
    RearLeft,
    RearMiddle,
    RearRight,
    /// All loudspeakers of the built-in audio system driven together.
    AudioSystem,
}

impl SourcePosition {
    pub const ALL: [SourcePosition; 6] = [
        SourcePosition::Driver,
        SourcePosition::FrontPassenger,
        SourcePosition::RearLeft,
        SourcePosition::RearMiddle,
        SourcePosition::RearRight,
        SourcePosition::AudioSystem,
    ];

    /// Passenger seats, i.e. every position except the audio system.
    pub const SEATS: [SourcePosition; 5] = [
        SourcePosition::Driver,
        SourcePosition::FrontPassenger,
        SourcePosition::RearLeft,
        SourcePosition::RearMiddle,
        SourcePosition::RearRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourcePosition::Driver => "driver",
            SourcePosition::FrontPassenger => "front_passenger",
            SourcePosition::RearLeft => "rear_left",
            SourcePosition::RearMiddle => "rear_middle",
            SourcePosition::RearRight => "rear_right",
            SourcePosition::AudioSystem => "audio_system",
        }
    }
}

impl fmt::Display for SourcePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourcePosition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourcePosition::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SourcePosition::ALL.iter().map(|p| p.as_str()).collect();
                format!("unknown source position `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Window aperture: 0 all closed, 1 front slightly open, 2 front fully open,
/// 3 all four fully open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct WindowState(u8);

impl WindowState {
    pub const ALL: [WindowState; 4] = [WindowState(0), WindowState(1), WindowState(2), WindowState(3)];

    pub fn new(value: u8) -> Result<Self, String> {
        if value <= 3 {
            Ok(Self(value))
        } else {
            Err(format!("w must be in 0..=3, got {value}"))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for WindowState {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<WindowState> for u8 {
    fn from(w: WindowState) -> u8 {
        w.0
    }
}

impl fmt::Display for WindowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ventilation / air-conditioning power level, 1 (lowest) to 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct VentLevel(u8);

impl VentLevel {
    pub fn new(value: u8) -> Result<Self, String> {
        if (1..=3).contains(&value) {
            Ok(Self(value))
        } else {
            Err(format!("l must be in 1..=3, got {value}"))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for VentLevel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<VentLevel> for u8 {
    fn from(l: VentLevel) -> u8 {
        l.0
    }
}

impl fmt::Display for VentLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Microphone configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupKind {
    /// Compact circular array on the dashboard.
    Array,
    /// Microphones spread over the cabin.
    Distributed,
}

impl SetupKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetupKind::Array => "array",
            SetupKind::Distributed => "distributed",
        }
    }
}

impl fmt::Display for SetupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SetupKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "array" => Ok(SetupKind::Array),
            "distributed" => Ok(SetupKind::Distributed),
            _ => Err(format!("unknown setup `{s}` (expected array or distributed)")),
        }
    }
}

/// What a noise recording captures.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseCondition {
    /// In-motion (or idle, speed 0) recording with ventilation off.
    Driving { speed: u32 },
    /// Static recording with the ventilation running.
    Ventilation { level: VentLevel },
    /// Annotated, non-stationary event.
    Event { annotation: String },
}

/// Stationary noise condition as reported in condition tables: speed (0 for
/// static), window aperture and ventilation (`None` = off).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub speed: u32,
    pub window: WindowState,
    #[serde(default)]
    pub ventilation: Option<VentLevel>,
}

impl Condition {
    pub fn driving(speed: u32, window: WindowState) -> Self {
        Self { speed, window, ventilation: None }
    }

    pub fn ventilation(level: VentLevel, window: WindowState) -> Self {
        Self { speed: 0, window, ventilation: Some(level) }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "speed={},w={}", self.speed, self.window)?;
        if let Some(l) = self.ventilation {
            write!(f, ",vent={l}")?;
        }
        Ok(())
    }
}

impl FromStr for Condition {
    type Err = String;

    /// Parses `speed=70,w=0[,vent=2]`; a missing speed means 0.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut speed = 0;
        let mut window = None;
        let mut ventilation = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let num = |v: &str| v.parse::<u32>().map_err(|e| format!("{key}: {e}"));
            match key {
                "speed" | "s" => speed = num(value)?,
                "w" | "window" => window = Some(WindowState::new(num(value)? as u8)?),
                "vent" | "ventilation" | "l" => {
                    if value != "off" {
                        ventilation = Some(VentLevel::new(num(value)? as u8)?);
                    }
                }
                _ => return Err(format!("unknown condition key `{key}`")),
            }
        }
        let window = window.ok_or("condition needs w=<0..3>")?;
        if ventilation.is_some() && speed != 0 {
            return Err("ventilation conditions are static (speed must be 0)".into());
        }
        Ok(Self { speed, window, ventilation })
    }
}
