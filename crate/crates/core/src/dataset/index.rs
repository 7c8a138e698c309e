use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use once_cell::sync::OnceCell;

use super::manifest::{
    CarManifest, GeometryManifest, IrManifest, Manifest, NoiseManifest, SetupManifest, FORMAT_VERSION,
    MANIFEST_FILE,
};
use super::types::{Condition, NoiseCondition, SetupKind, SourcePosition, VentLevel, WindowState};
use super::DatasetError;
use crate::array::ArrayGeometry;
use crate::dsp::{AudioBuffer, SensitivityMap};
use crate::wav::read_wav;

/// Physical microphone count of every setup.
pub const MICS_PER_SETUP: usize = 8;

/// Impulse responses from one source position to all microphones of a setup,
/// for one window state.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponseSet {
    pub source_position: SourcePosition,
    pub window_state: WindowState,
    /// Source level in dBA at 1 m during the measurement.
    pub calibration_level: f64,
    /// Dry-signal active level (dBFS) corresponding to `calibration_level`.
    pub source_level_dbfs: f64,
    pub ir: AudioBuffer<f64>,
}

/// Condition-tagged multichannel noise recording.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseClip {
    pub condition: NoiseCondition,
    pub window_state: WindowState,
    pub audio: AudioBuffer<f64>,
}

/// Catalog entry for an impulse response; audio is decoded on first access.
#[derive(Debug)]
pub struct IrEntry {
    meta: IrManifest,
    path: PathBuf,
    channel_count: usize,
    audio: OnceCell<AudioBuffer<f64>>,
}

impl IrEntry {
    pub fn position(&self) -> SourcePosition {
        self.meta.position
    }

    pub fn window(&self) -> WindowState {
        self.meta.window
    }

    pub fn calibration_level(&self) -> f64 {
        self.meta.calibration_level
    }

    pub fn source_level_dbfs(&self) -> f64 {
        self.meta.source_level_dbfs
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn audio(&self) -> Result<&AudioBuffer<f64>, DatasetError> {
        self.audio.get_or_try_init(|| {
            let buf: AudioBuffer<f64> = read_wav(&self.path)?;
            check_channels(&self.path, &buf, self.channel_count)?;
            if let Some(channel) = buf.channels().iter().position(|c| c.iter().all(|v| *v == 0.0)) {
                return Err(DatasetError::SilentChannel { path: self.path.clone(), channel });
            }
            Ok(buf)
        })
    }

    pub fn to_set(&self) -> Result<ImpulseResponseSet, DatasetError> {
        Ok(ImpulseResponseSet {
            source_position: self.meta.position,
            window_state: self.meta.window,
            calibration_level: self.meta.calibration_level,
            source_level_dbfs: self.meta.source_level_dbfs,
            ir: self.audio()?.clone(),
        })
    }
}

/// Catalog entry for a noise recording; audio is decoded on first access.
#[derive(Debug)]
pub struct NoiseEntry {
    meta: NoiseManifest,
    path: PathBuf,
    channel_count: usize,
    audio: OnceCell<AudioBuffer<f64>>,
}

impl NoiseEntry {
    pub fn condition(&self) -> &NoiseCondition {
        &self.meta.condition
    }

    pub fn window(&self) -> WindowState {
        self.meta.window
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn audio(&self) -> Result<&AudioBuffer<f64>, DatasetError> {
        self.audio.get_or_try_init(|| {
            let buf: AudioBuffer<f64> = read_wav(&self.path)?;
            check_channels(&self.path, &buf, self.channel_count)?;
            Ok(buf)
        })
    }

    pub fn to_clip(&self) -> Result<NoiseClip, DatasetError> {
        Ok(NoiseClip {
            condition: self.meta.condition.clone(),
            window_state: self.meta.window,
            audio: self.audio()?.clone(),
        })
    }
}

fn check_channels(path: &Path, buf: &AudioBuffer<f64>, expected: usize) -> Result<(), DatasetError> {
    if buf.channel_count() != expected {
        return Err(DatasetError::ChannelCount {
            path: path.to_path_buf(),
            expected,
            found: buf.channel_count(),
        });
    }
    Ok(())
}

/// One microphone setup of one car.
#[derive(Debug)]
pub struct Setup {
    kind: SetupKind,
    channel_count: usize,
    reference_channel: usize,
    sample_rate: u32,
    sensitivity: SensitivityMap,
    geometry: Option<ArrayGeometry<f64>>,
    source_positions: Vec<SourcePosition>,
    irs: Vec<IrEntry>,
    ir_keys: HashMap<(SourcePosition, WindowState), usize>,
    noise: Vec<NoiseEntry>,
    driving: HashMap<(u32, WindowState), usize>,
    ventilation: HashMap<(VentLevel, WindowState), usize>,
}

impl Setup {
    pub fn kind(&self) -> SetupKind {
        self.kind
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn reference_channel(&self) -> usize {
        self.reference_channel
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn sensitivity(&self) -> &SensitivityMap {
        &self.sensitivity
    }

    pub fn geometry(&self) -> Option<&ArrayGeometry<f64>> {
        self.geometry.as_ref()
    }

    pub fn source_positions(&self) -> &[SourcePosition] {
        &self.source_positions
    }

    pub fn impulse_responses(&self) -> &[IrEntry] {
        &self.irs
    }

    pub fn noise(&self) -> &[NoiseEntry] {
        &self.noise
    }

    pub fn impulse_response(&self, position: SourcePosition, window: WindowState) -> Option<&IrEntry> {
        self.ir_keys.get(&(position, window)).map(|&i| &self.irs[i])
    }

    /// Stationary noise recording for `condition`: a driving clip when
    /// ventilation is off, otherwise a (static) ventilation clip.
    pub fn noise_for(&self, condition: &Condition) -> Option<&NoiseEntry> {
        let idx = match condition.ventilation {
            None => self.driving.get(&(condition.speed, condition.window)),
            Some(level) if condition.speed == 0 => self.ventilation.get(&(level, condition.window)),
            Some(_) => None,
        };
        idx.map(|&i| &self.noise[i])
    }

    /// Annotated event clips.
    pub fn events(&self) -> impl Iterator<Item = &NoiseEntry> {
        self.noise
            .iter()
            .filter(|n| matches!(n.meta.condition, NoiseCondition::Event { .. }))
    }

    /// Like [`Setup::impulse_response`], with an error listing the catalog.
    pub fn require_impulse_response(
        &self,
        position: SourcePosition,
        window: WindowState,
    ) -> Result<&IrEntry, DatasetError> {
        self.impulse_response(position, window)
            .ok_or_else(|| DatasetError::MissingImpulseResponse {
                position,
                window,
                available: self.ir_key_list(),
            })
    }

    /// Like [`Setup::noise_for`], with an error listing the matching grid.
    pub fn require_noise(&self, condition: &Condition) -> Result<&NoiseEntry, DatasetError> {
        self.noise_for(condition).ok_or_else(|| DatasetError::MissingNoise {
            condition: *condition,
            available: if condition.ventilation.is_some() {
                self.ventilation_key_list()
            } else {
                self.driving_key_list()
            },
        })
    }

    fn ir_key_list(&self) -> String {
        let mut keys: Vec<_> = self.ir_keys.keys().copied().collect();
        keys.sort();
        keys.iter()
            .map(|(p, w)| format!("{p}/w{w}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn driving_key_list(&self) -> String {
        let mut keys: Vec<_> = self.driving.keys().copied().collect();
        keys.sort_by_key(|&(s, w)| (w, s));
        keys.iter()
            .map(|(s, w)| format!("speed={s},w={w}"))
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn ventilation_key_list(&self) -> String {
        let mut keys: Vec<_> = self.ventilation.keys().copied().collect();
        keys.sort_by_key(|&(l, w)| (w, l));
        keys.iter()
            .map(|(l, w)| format!("vent={l},w={w}"))
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn to_manifest(&self) -> SetupManifest {
        SetupManifest {
            kind: self.kind,
            channel_count: self.channel_count,
            reference_channel: self.reference_channel,
            sample_rate: self.sample_rate,
            sensitivity: self.sensitivity.clone(),
            geometry: self.geometry.as_ref().map(|g| GeometryManifest {
                mic_positions: g.positions().to_vec(),
                speed_of_sound: g.speed_of_sound(),
            }),
            source_positions: self.source_positions.clone(),
            impulse_responses: self.irs.iter().map(|e| e.meta.clone()).collect(),
            noise: self.noise.iter().map(|e| e.meta.clone()).collect(),
        }
    }
}

/// A car with its declared condition grid and setups.
#[derive(Debug)]
pub struct Car {
    pub id: String,
    pub brand: String,
    pub model: String,
    pub year: u16,
    pub audio_system: bool,
    pub speed_grid: Vec<u32>,
    pub ventilation_levels: Vec<VentLevel>,
    pub window_states: Vec<WindowState>,
    pub unavailable: Vec<Condition>,
    setups: Vec<Setup>,
}

impl Car {
    pub fn setups(&self) -> &[Setup] {
        &self.setups
    }

    pub fn setup(&self, kind: SetupKind) -> Result<&Setup, DatasetError> {
        self.setups
            .iter()
            .find(|s| s.kind == kind)
            .ok_or_else(|| DatasetError::UnknownSetup { car: self.id.clone(), setup: kind })
    }

    pub fn is_unavailable(&self, condition: &Condition) -> bool {
        self.unavailable.contains(condition)
    }

    /// Every stationary condition of the declared grid, driving conditions
    /// first (ordered by window state, then speed), then ventilation.
    pub fn condition_grid(&self) -> Vec<Condition> {
        let mut grid = Vec::new();
        for &w in &self.window_states {
            for &s in &self.speed_grid {
                grid.push(Condition::driving(s, w));
            }
        }
        for &w in &self.window_states {
            for &l in &self.ventilation_levels {
                grid.push(Condition::ventilation(l, w));
            }
        }
        grid
    }
}

/// Loaded, immutable view of a dataset root.
#[derive(Debug)]
pub struct DatasetIndex {
    root: PathBuf,
    cars: Vec<Car>,
}

impl DatasetIndex {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cars(&self) -> &[Car] {
        &self.cars
    }

    pub fn car(&self, id: &str) -> Result<&Car, DatasetError> {
        self.cars
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| DatasetError::UnknownCar(id.to_string()))
    }

    pub fn setup(&self, car: &str, kind: SetupKind) -> Result<&Setup, DatasetError> {
        self.car(car)?.setup(kind)
    }

    /// Rebuilds the manifest from the loaded index.
    pub fn to_manifest(&self) -> Manifest {
        Manifest {
            format_version: FORMAT_VERSION,
            cars: self
                .cars
                .iter()
                .map(|c| CarManifest {
                    id: c.id.clone(),
                    brand: c.brand.clone(),
                    model: c.model.clone(),
                    year: c.year,
                    audio_system: c.audio_system,
                    speed_grid: c.speed_grid.clone(),
                    ventilation_levels: c.ventilation_levels.iter().map(|l| l.get()).collect(),
                    window_states: c.window_states.clone(),
                    unavailable: c.unavailable.clone(),
                    setups: c.setups.iter().map(Setup::to_manifest).collect(),
                })
                .collect(),
        }
    }
}

/// Reads `manifest.json` under `root` and builds the catalog. File references
/// are checked for existence; audio is decoded lazily.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<DatasetIndex, DatasetError> {
    let root = root.as_ref().to_path_buf();
    let manifest_path = root.join(MANIFEST_FILE);
    let text = match fs::read_to_string(&manifest_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(DatasetError::MissingManifest(manifest_path))
        }
        Err(source) => return Err(DatasetError::Io { path: manifest_path, source }),
    };
    let manifest: Manifest = serde_json::from_str(&text).map_err(|source| {
        DatasetError::MalformedManifest { path: manifest_path.clone(), source }
    })?;
    let invalid = |detail: String| DatasetError::InvalidManifest { path: manifest_path.clone(), detail };

    if manifest.format_version != FORMAT_VERSION {
        return Err(invalid(format!("unsupported format_version {}", manifest.format_version)));
    }

    let mut cars = Vec::with_capacity(manifest.cars.len());
    for car in manifest.cars {
        if cars.iter().any(|c: &Car| c.id == car.id) {
            return Err(invalid(format!("car `{}` declared twice", car.id)));
        }
        let ventilation_levels = car
            .ventilation_levels
            .iter()
            .map(|&l| VentLevel::new(l))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("car `{}`: {e}", car.id)))?;

        let mut setups: Vec<Setup> = Vec::with_capacity(car.setups.len());
        for setup in car.setups {
            if setups.iter().any(|s| s.kind == setup.kind) {
                return Err(invalid(format!("car `{}` declares the {} setup twice", car.id, setup.kind)));
            }
            setups.push(build_setup(&root, &car.id, setup, &invalid)?);
        }

        cars.push(Car {
            id: car.id,
            brand: car.brand,
            model: car.model,
            year: car.year,
            audio_system: car.audio_system,
            speed_grid: car.speed_grid,
            ventilation_levels,
            window_states: car.window_states,
            unavailable: car.unavailable,
            setups,
        });
    }
    Ok(DatasetIndex { root, cars })
}

fn build_setup(
    root: &Path,
    car: &str,
    setup: SetupManifest,
    invalid: &dyn Fn(String) -> DatasetError,
) -> Result<Setup, DatasetError> {
    let label = format!("{car}/{}", setup.kind);
    if setup.channel_count != MICS_PER_SETUP {
        return Err(invalid(format!(
            "{label}: channel_count must be {MICS_PER_SETUP}, got {}",
            setup.channel_count
        )));
    }
    if setup.reference_channel >= setup.channel_count {
        return Err(invalid(format!(
            "{label}: reference_channel {} out of range",
            setup.reference_channel
        )));
    }
    if setup.sensitivity.len() != setup.channel_count {
        return Err(invalid(format!(
            "{label}: {} sensitivity offsets for {} channels",
            setup.sensitivity.len(),
            setup.channel_count
        )));
    }
    if setup.sample_rate == 0 {
        return Err(invalid(format!("{label}: sample_rate must be positive")));
    }
    let geometry = match setup.geometry {
        Some(g) => {
            if g.mic_positions.len() != setup.channel_count {
                return Err(invalid(format!(
                    "{label}: geometry lists {} microphones for {} channels",
                    g.mic_positions.len(),
                    setup.channel_count
                )));
            }
            Some(ArrayGeometry::new(g.mic_positions, g.speed_of_sound)?)
        }
        None if setup.kind == SetupKind::Array => {
            return Err(invalid(format!("{label}: array setups require geometry")));
        }
        None => None,
    };

    let resolve = |file: &str| -> Result<PathBuf, DatasetError> {
        let path = root.join(file);
        if path.is_file() {
            Ok(path)
        } else {
            Err(DatasetError::DanglingReference(path))
        }
    };
    let duplicate = |key: String| DatasetError::DuplicateKey {
        car: car.to_string(),
        setup: setup.kind,
        key,
    };

    let mut irs = Vec::with_capacity(setup.impulse_responses.len());
    let mut ir_keys = HashMap::new();
    for meta in setup.impulse_responses {
        if !(meta.calibration_level > 0.0 && meta.calibration_level.is_finite()) {
            return Err(invalid(format!(
                "{label}: calibration_level must be positive for {} w={}",
                meta.position, meta.window
            )));
        }
        if !meta.source_level_dbfs.is_finite() {
            return Err(invalid(format!("{label}: source_level_dbfs must be finite")));
        }
        let key = (meta.position, meta.window);
        if ir_keys.insert(key, irs.len()).is_some() {
            return Err(duplicate(format!("(p={}, w={})", meta.position, meta.window)));
        }
        irs.push(IrEntry {
            path: resolve(&meta.file)?,
            meta,
            channel_count: setup.channel_count,
            audio: OnceCell::new(),
        });
    }

    let mut noise = Vec::with_capacity(setup.noise.len());
    let mut driving = HashMap::new();
    let mut ventilation = HashMap::new();
    for meta in setup.noise {
        let idx = noise.len();
        let clash = match &meta.condition {
            NoiseCondition::Driving { speed } => driving
                .insert((*speed, meta.window), idx)
                .map(|_| format!("(driving speed={speed}, w={})", meta.window)),
            NoiseCondition::Ventilation { level } => ventilation
                .insert((*level, meta.window), idx)
                .map(|_| format!("(ventilation level={level}, w={})", meta.window)),
            NoiseCondition::Event { .. } => None,
        };
        if let Some(key) = clash {
            return Err(duplicate(key));
        }
        noise.push(NoiseEntry {
            path: resolve(&meta.file)?,
            meta,
            channel_count: setup.channel_count,
            audio: OnceCell::new(),
        });
    }

    Ok(Setup {
        kind: setup.kind,
        channel_count: setup.channel_count,
        reference_channel: setup.reference_channel,
        sample_rate: setup.sample_rate,
        sensitivity: setup.sensitivity,
        geometry,
        source_positions: setup.source_positions,
        irs,
        ir_keys,
        noise,
        driving,
        ventilation,
    })
}
