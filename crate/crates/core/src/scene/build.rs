use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::recycle::recycle;
use super::spec::{AudioInput, Component, SceneSpec};
use super::SceneError;
use crate::dataset::{
    Car, Condition, DatasetIndex, ImpulseResponseSet, IrEntry, Setup, SetupKind, SourcePosition,
};
use crate::dsp::{
    a_weighted_level_db, active_speech_level_db, convolve, downmix, resample, AudioBuffer, DspError,
};

fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Seed of the offset generator of one component, derived from the scene seed.
pub fn stream_seed(seed: u64, component: Component) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(component as u64 + 1);
    rng.next_u64()
}

/// Gains applied while building the scene.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    /// Brings the dry speech to the IR's source reference level.
    pub speech_normalization: Option<f64>,
    /// 10^((Ls - calibration level)/20).
    pub speech_effort: Option<f64>,
    /// Product of the two above.
    pub speech: Option<f64>,
    pub audio_program: Option<f64>,
}

/// Equivalent levels in dBA at the reference microphone; `None` for silent
/// components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub speech: Option<f64>,
    pub audio_program: Option<f64>,
    pub noise: Option<f64>,
    pub ventilation: Option<f64>,
    pub total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum SceneWarning {
    /// Y exceeds digital full scale; it is not renormalized.
    Clipping { channel: usize, sample: usize, peak: f64, peak_dbfs: f64 },
}

impl std::fmt::Display for SceneWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SceneWarning::Clipping { channel, sample, peak_dbfs, .. } => write!(
                f,
                "Y peaks at {peak_dbfs:+.2} dBFS on microphone {channel} (sample {sample}); output will clip"
            ),
        }
    }
}

/// Sidecar metadata of a synthesized scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub car: String,
    pub setup: SetupKind,
    pub p: SourcePosition,
    #[serde(rename = "Ls")]
    pub ls: f64,
    pub w: u8,
    #[serde(rename = "La")]
    pub la: Option<f64>,
    pub s: Option<u32>,
    pub l: Option<u8>,
    pub seed: u64,
    pub sample_rate: u32,
    pub samples: usize,
    pub channels: Vec<usize>,
    pub reference_channel: usize,
    pub gains: Gains,
    pub levels: Levels,
    pub warnings: Vec<SceneWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneResult {
    pub y: AudioBuffer<f64>,
    pub speech: AudioBuffer<f64>,
    pub audio_program: AudioBuffer<f64>,
    pub noise: AudioBuffer<f64>,
    pub ventilation: AudioBuffer<f64>,
    pub report: SceneReport,
}

impl SceneResult {
    pub fn component(&self, component: Component) -> &AudioBuffer<f64> {
        match component {
            Component::Speech => &self.speech,
            Component::AudioProgram => &self.audio_program,
            Component::Noise => &self.noise,
            Component::Ventilation => &self.ventilation,
        }
    }
}

/// Resolved scene: validated spec, working channel set and resampled speech.
struct Plan<'a> {
    spec: &'a SceneSpec,
    car: &'a Car,
    setup: &'a Setup,
    /// Selected microphones followed by the reference microphone when it
    /// is not selected.
    work: Vec<usize>,
    selected: usize,
    /// Position of the reference microphone in `work`.
    reference: usize,
    x: AudioBuffer<f64>,
}

impl<'a> Plan<'a> {
    fn new(index: &'a DatasetIndex, spec: &'a SceneSpec) -> Result<Self, SceneError> {
        let (car, setup) = spec.resolve(index)?;
        let mut work = spec.selected_channels(setup);
        let selected = work.len();
        let ref_mic = setup.reference_channel();
        let reference = match work.iter().position(|&c| c == ref_mic) {
            Some(i) => i,
            None => {
                work.push(ref_mic);
                work.len() - 1
            }
        };
        let x = load(&spec.x, "x")?;
        if x.channel_count() != 1 {
            return Err(SceneError::InvalidParameter {
                param: "x",
                message: format!("x must be mono (got {} channels)", x.channel_count()),
            });
        }
        let x = resample(&x, spec.target_rate).map_err(|e| match e {
            DspError::EmptyInput => SceneError::InvalidParameter { param: "x", message: "x is empty".into() },
            e => e.into(),
        })?;
        if x.is_empty() {
            return Err(SceneError::InvalidParameter { param: "x", message: "x is empty".into() });
        }
        Ok(Plan { spec, car, setup, work, selected, reference, x })
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    fn zeros(&self) -> AudioBuffer<f64> {
        AudioBuffer::zeros(self.spec.target_rate, self.work.len(), self.len()).expect("valid shape")
    }

    /// Equivalent level at the reference microphone.
    fn level(&self, buf: &AudioBuffer<f64>) -> Option<f64> {
        let offset = self.setup.sensitivity().offset(self.setup.reference_channel()).ok()?;
        a_weighted_level_db(buf, self.reference).ok().map(|l| l + offset)
    }

    fn speech(&self) -> Result<(AudioBuffer<f64>, Gains), SceneError> {
        let entry = self.setup.require_impulse_response(self.spec.p, self.spec.window())?;
        render_speech(entry, &self.x, self.spec.ls, &self.work)
    }

    fn audio_program(&self) -> Result<(AudioBuffer<f64>, Option<f64>), SceneError> {
        let (Some(la), Some(z)) = (self.spec.la, &self.spec.z) else {
            return Ok((self.zeros(), None));
        };
        if !self.car.audio_system {
            return Err(crate::dataset::DatasetError::NoAudioSystem(self.car.id.clone()).into());
        }
        let entry = self
            .setup
            .require_impulse_response(SourcePosition::AudioSystem, self.spec.window())?;
        let z = load(z, "z")?;
        if z.is_empty() {
            return Err(SceneError::InvalidParameter { param: "z", message: "z is empty".into() });
        }
        let mono = resample(&downmix(&z), self.spec.target_rate)?;
        if mono.is_silent() {
            return Ok((self.zeros(), None));
        }
        let looped = recycle(&mono, self.len(), stream_seed(self.spec.seed, Component::AudioProgram))?;
        let ir = ir_at_rate(&entry.audio()?.select_channels(&self.work)?, self.spec.target_rate)?;
        let wet = convolve(&looped, &ir)?;
        let Some(measured) = self.level(&wet) else {
            return Ok((self.zeros(), None));
        };
        let gain = db_to_gain(la - measured);
        Ok((wet.scaled(gain), Some(gain)))
    }

    fn noise(&self, component: Component) -> Result<AudioBuffer<f64>, SceneError> {
        let w = self.spec.window();
        let condition = match component {
            Component::Noise => self.spec.s.map(|s| Condition::driving(s, w)),
            Component::Ventilation => self.spec.vent_level().map(|l| Condition::ventilation(l, w)),
            _ => unreachable!("not a noise component"),
        };
        let Some(condition) = condition else {
            return Ok(self.zeros());
        };
        let entry = self.setup.require_noise(&condition)?;
        let clip = entry.audio()?.select_channels(&self.work)?;
        let clip = resample(&clip, self.spec.target_rate)?;
        Ok(recycle(&clip, self.len(), stream_seed(self.spec.seed, component))?)
    }

    /// Drop the trailing reference-only channel, if any.
    fn output(&self, buf: &AudioBuffer<f64>) -> AudioBuffer<f64> {
        if self.selected == self.work.len() {
            buf.clone()
        } else {
            buf.select_channels(&(0..self.selected).collect::<Vec<_>>()).expect("work channels")
        }
    }
}

fn load(input: &AudioInput, param: &'static str) -> Result<AudioBuffer<f64>, SceneError> {
    input
        .load()
        .map(|b| b.into_owned())
        .map_err(|source| SceneError::Input { param, source })
}

/// Impulse response resampled to `rate`, scaled so its transfer function is
/// preserved.
fn ir_at_rate(ir: &AudioBuffer<f64>, rate: u32) -> Result<AudioBuffer<f64>, DspError> {
    if ir.sample_rate() == rate {
        return Ok(ir.clone());
    }
    Ok(resample(ir, rate)?.scaled(ir.sample_rate() as f64 / rate as f64))
}

/// Filtered speech for a mono signal `x` through `entry` at effort `ls`,
/// on microphones `channels`.
pub(crate) fn render_speech(
    entry: &IrEntry,
    x: &AudioBuffer<f64>,
    ls: f64,
    channels: &[usize],
) -> Result<(AudioBuffer<f64>, Gains), SceneError> {
    let active = active_speech_level_db(x, 0).map_err(|e| match e {
        DspError::SilentSignal => SceneError::InvalidParameter { param: "x", message: "x is silent".into() },
        e => e.into(),
    })?;
    let normalization = db_to_gain(entry.source_level_dbfs() - active);
    let effort = db_to_gain(ls - entry.calibration_level());
    let gain = normalization * effort;
    let ir = ir_at_rate(&entry.audio()?.select_channels(channels)?, x.sample_rate())?;
    let out = convolve(&x.scaled(gain), &ir)?;
    let gains = Gains {
        speech_normalization: Some(normalization),
        speech_effort: Some(effort),
        speech: Some(gain),
        audio_program: None,
    };
    Ok((out, gains))
}

fn sum(parts: [&AudioBuffer<f64>; 4]) -> AudioBuffer<f64> {
    let [s, a, n, v] = parts;
    let channels = (0..s.channel_count())
        .map(|c| {
            let (s, a, n, v) =
                (s.channel(c).unwrap(), a.channel(c).unwrap(), n.channel(c).unwrap(), v.channel(c).unwrap());
            (0..s.len()).map(|i| s[i] + a[i] + n[i] + v[i]).collect()
        })
        .collect();
    AudioBuffer::new(s.sample_rate(), channels).expect("equal shapes")
}

fn clipping(y: &AudioBuffer<f64>, channels: &[usize]) -> Option<SceneWarning> {
    let (mut best, mut at) = (0.0, (0, 0));
    for (k, ch) in y.channels().iter().enumerate() {
        for (i, &v) in ch.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                at = (channels[k], i);
            }
        }
    }
    (best > 1.0).then(|| SceneWarning::Clipping {
        channel: at.0,
        sample: at.1,
        peak: best,
        peak_dbfs: 20.0 * best.log10(),
    })
}

/// Render the enabled components of `spec` and superpose them.
pub fn synthesize(index: &DatasetIndex, spec: &SceneSpec) -> Result<SceneResult, SceneError> {
    let plan = Plan::new(index, spec)?;
    let on = |c| spec.components.contains(c);
    let mut gains = Gains::default();

    let s = if on(Component::Speech) {
        let (s, g) = plan.speech()?;
        gains = g;
        s
    } else {
        plan.zeros()
    };
    let a = if on(Component::AudioProgram) {
        let (a, g) = plan.audio_program()?;
        gains.audio_program = g;
        a
    } else {
        plan.zeros()
    };
    let n = if on(Component::Noise) { plan.noise(Component::Noise)? } else { plan.zeros() };
    let v = if on(Component::Ventilation) { plan.noise(Component::Ventilation)? } else { plan.zeros() };
    let y = sum([&s, &a, &n, &v]);

    let levels = Levels {
        speech: plan.level(&s),
        audio_program: plan.level(&a),
        noise: plan.level(&n),
        ventilation: plan.level(&v),
        total: plan.level(&y),
    };
    let channels = plan.work[..plan.selected].to_vec();
    let y = plan.output(&y);
    let warnings = clipping(&y, &channels).into_iter().collect();
    let report = SceneReport {
        car: plan.car.id.clone(),
        setup: plan.setup.kind(),
        p: spec.p,
        ls: spec.ls,
        w: spec.w,
        la: spec.la,
        s: spec.s,
        l: spec.l,
        seed: spec.seed,
        sample_rate: spec.target_rate,
        samples: plan.len(),
        channels,
        reference_channel: plan.setup.reference_channel(),
        gains,
        levels,
        warnings,
    };
    Ok(SceneResult {
        y,
        speech: plan.output(&s),
        audio_program: plan.output(&a),
        noise: plan.output(&n),
        ventilation: plan.output(&v),
        report,
    })
}

/// Filtered speech S on the selected microphones.
pub fn build_speech(index: &DatasetIndex, spec: &SceneSpec) -> Result<AudioBuffer<f64>, SceneError> {
    let plan = Plan::new(index, spec)?;
    Ok(plan.output(&plan.speech()?.0))
}

/// Audio program A; zeros when `La` is absent.
pub fn build_audio_program(index: &DatasetIndex, spec: &SceneSpec) -> Result<AudioBuffer<f64>, SceneError> {
    let plan = Plan::new(index, spec)?;
    Ok(plan.output(&plan.audio_program()?.0))
}

/// Driving noise N; zeros when `s` is absent.
pub fn build_noise(index: &DatasetIndex, spec: &SceneSpec) -> Result<AudioBuffer<f64>, SceneError> {
    let plan = Plan::new(index, spec)?;
    Ok(plan.output(&plan.noise(Component::Noise)?))
}

/// Ventilation noise V; zeros when `l` is absent.
pub fn build_ventilation(index: &DatasetIndex, spec: &SceneSpec) -> Result<AudioBuffer<f64>, SceneError> {
    let plan = Plan::new(index, spec)?;
    Ok(plan.output(&plan.noise(Component::Ventilation)?))
}

/// Impulse responses used by a scene, restricted to its microphones: the
/// talker IR, then the audio-system IR when `La` is set.
pub fn scenario_irs(index: &DatasetIndex, spec: &SceneSpec) -> Result<Vec<ImpulseResponseSet>, SceneError> {
    let (_, setup) = spec.resolve(index)?;
    let channels = spec.selected_channels(setup);
    let mut positions = vec![spec.p];
    if spec.la.is_some() {
        positions.push(SourcePosition::AudioSystem);
    }
    positions
        .into_iter()
        .map(|p| {
            let mut set = setup.require_impulse_response(p, spec.window())?.to_set()?;
            set.ir = set.ir.select_channels(&channels)?;
            Ok(set)
        })
        .collect()
}
