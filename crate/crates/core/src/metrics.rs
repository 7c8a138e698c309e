//! Noise level, SNR and condition tables at a reference microphone.

use std::collections::HashMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::fixture::{pink, white};
use crate::dataset::{Condition, DatasetError, DatasetIndex, Setup, SetupKind, SourcePosition, VentLevel, WindowState};
use crate::dsp::{a_weighted_level_db, AudioBuffer, DspError};
use crate::scene::{render_speech, SceneError};

/// Duration of the pink probe driven through the speech path.
pub const PROBE_SECONDS: f64 = 10.0;
const PROBE_SEED: u64 = 0x5eed_0f_9a1e;

/// Reported levels are rounded to multiples of 2^-20 dB. Sums and
/// differences of such values are exact in f64.
pub const LEVEL_QUANTUM: f64 = 1.0 / 1_048_576.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("microphone {channel} out of range (setup has {available})")]
    Channel { channel: usize, available: usize },
    #[error("{0} is not available")]
    Unavailable(Condition),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn quantize(db: f64) -> f64 {
    (db / LEVEL_QUANTUM).round() * LEVEL_QUANTUM
}

/// What is measured and where.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsQuery {
    pub car: String,
    pub setup: SetupKind,
    pub p: SourcePosition,
    /// Speech effort in dBA at 1 m.
    pub ls: f64,
    /// Microphone; the setup's reference microphone when `None`.
    pub channel: Option<usize>,
}

impl MetricsQuery {
    pub fn new(car: impl Into<String>, setup: SetupKind, p: SourcePosition, ls: f64) -> Self {
        MetricsQuery { car: car.into(), setup, p, ls, channel: None }
    }

    pub fn with_channel(mut self, channel: usize) -> Self {
        self.channel = Some(channel);
        self
    }

    fn channel_in(&self, setup: &Setup) -> Result<usize, MetricsError> {
        let channel = self.channel.unwrap_or(setup.reference_channel());
        if channel >= setup.channel_count() {
            return Err(MetricsError::Channel { channel, available: setup.channel_count() });
        }
        Ok(channel)
    }
}

/// One row of a condition table. Levels are `None` for combinations that
/// were not recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMetrics {
    pub speed: u32,
    pub w: u8,
    /// Ventilation level, `None` when off.
    pub ventilation: Option<u8>,
    pub noise_dba: Option<f64>,
    pub snr_db: Option<f64>,
    pub speech_dba: Option<f64>,
    pub channel: usize,
}

impl ConditionMetrics {
    fn new(condition: Condition, channel: usize, levels: Option<(f64, f64)>) -> Self {
        let (noise, speech) = match levels {
            Some((n, s)) => (Some(n), Some(s)),
            None => (None, None),
        };
        ConditionMetrics {
            speed: condition.speed,
            w: condition.window.get(),
            ventilation: condition.ventilation.map(VentLevel::get),
            noise_dba: noise,
            snr_db: levels.map(|(n, s)| s - n),
            speech_dba: speech,
            channel,
        }
    }

    pub fn condition(&self) -> Condition {
        Condition {
            speed: self.speed,
            window: WindowState::new(self.w).expect("valid row"),
            ventilation: self.ventilation.map(|l| VentLevel::new(l).expect("valid row")),
        }
    }

    pub fn is_available(&self) -> bool {
        self.noise_dba.is_some()
    }
}

/// Equivalent level in dBA of the full noise recording for `condition`, at
/// its native rate.
pub fn noise_level(
    index: &DatasetIndex,
    car: &str,
    setup: SetupKind,
    condition: &Condition,
    channel: usize,
) -> Result<f64, MetricsError> {
    let setup = index.setup(car, setup)?;
    if channel >= setup.channel_count() {
        return Err(MetricsError::Channel { channel, available: setup.channel_count() });
    }
    noise_level_in(setup, condition, channel)
}

fn noise_level_in(setup: &Setup, condition: &Condition, channel: usize) -> Result<f64, MetricsError> {
    let clip = setup.require_noise(condition)?.audio()?;
    let offset = setup.sensitivity().offset(channel)?;
    Ok(quantize(a_weighted_level_db(clip, channel)? + offset))
}

/// Deterministic pink noise at `rate`.
pub fn probe(rate: u32) -> AudioBuffer<f64> {
    let len = (PROBE_SECONDS * rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    AudioBuffer::mono(rate, pink(white(&mut rng, len))).expect("finite probe")
}

/// Level in dBA at the microphone of speech at effort `ls` from `p` with
/// window state `w`, rendered through the calibrated speech path.
pub fn speech_level(index: &DatasetIndex, query: &MetricsQuery, w: WindowState) -> Result<f64, MetricsError> {
    let setup = index.setup(&query.car, query.setup)?;
    let channel = query.channel_in(setup)?;
    speech_level_in(setup, query, w, channel)
}

fn speech_level_in(setup: &Setup, query: &MetricsQuery, w: WindowState, channel: usize) -> Result<f64, MetricsError> {
    let entry = setup.require_impulse_response(query.p, w)?;
    let (s, _) = render_speech(entry, &probe(setup.sample_rate()), query.ls, &[channel])?;
    let offset = setup.sensitivity().offset(channel)?;
    Ok(quantize(a_weighted_level_db(&s, 0)? + offset))
}

/// Noise level, speech level and SNR for one condition.
pub fn snr(index: &DatasetIndex, query: &MetricsQuery, condition: &Condition) -> Result<ConditionMetrics, MetricsError> {
    let car = index.car(&query.car)?;
    let setup = car.setup(query.setup)?;
    let channel = query.channel_in(setup)?;
    if car.is_unavailable(condition) {
        return Err(MetricsError::Unavailable(*condition));
    }
    let noise = noise_level_in(setup, condition, channel)?;
    let speech = speech_level_in(setup, query, condition.window, channel)?;
    Ok(ConditionMetrics::new(*condition, channel, Some((noise, speech))))
}

/// One row per stationary condition of the car's declared grid; rows whose
/// recording or impulse response is missing carry no levels.
pub fn condition_table(index: &DatasetIndex, query: &MetricsQuery) -> Result<Vec<ConditionMetrics>, MetricsError> {
    let car = index.car(&query.car)?;
    let setup = car.setup(query.setup)?;
    let channel = query.channel_in(setup)?;
    let mut speech: HashMap<WindowState, f64> = HashMap::new();
    let mut rows = Vec::new();
    for condition in car.condition_grid() {
        let recorded = !car.is_unavailable(&condition)
            && setup.noise_for(&condition).is_some()
            && setup.impulse_response(query.p, condition.window).is_some();
        let levels = if recorded {
            let s = match speech.get(&condition.window) {
                Some(&s) => s,
                None => {
                    let s = speech_level_in(setup, query, condition.window, channel)?;
                    speech.insert(condition.window, s);
                    s
                }
            };
            Some((noise_level_in(setup, &condition, channel)?, s))
        } else {
            None
        };
        rows.push(ConditionMetrics::new(condition, channel, levels));
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 7] = ["speed", "w", "ventilation", "noise_dba", "snr_db", "speech_dba", "channel"];

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |v| v.to_string())
}

/// CSV report; missing levels read `N/A`, ventilation off reads `off`.
pub fn write_csv<W: Write>(rows: &[ConditionMetrics], out: W) -> Result<(), MetricsError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(CSV_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.speed.to_string(),
            r.w.to_string(),
            r.ventilation.map_or_else(|| "off".to_string(), |l| l.to_string()),
            cell(r.noise_dba),
            cell(r.snr_db),
            cell(r.speech_dba),
            r.channel.to_string(),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// JSON array report; missing levels are `null`.
pub fn write_json<W: Write>(rows: &[ConditionMetrics], mut out: W) -> Result<(), MetricsError> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out).map_err(serde_json::Error::io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn probe_is_deterministic_and_pink() {
        let a = probe(16000);
        assert_eq!(a, probe(16000));
        assert_eq!(a.len(), 160_000);
        assert!(!a.is_silent());
    }

    #[test]
    fn csv_marks_absent_rows() {
        let w = WindowState::new(1).unwrap();
        let rows = vec![
            ConditionMetrics::new(Condition::driving(70, w), 4, Some((50.5, 66.25))),
            ConditionMetrics::new(Condition::ventilation(VentLevel::new(2).unwrap(), w), 4, None),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "speed,w,ventilation,noise_dba,snr_db,speech_dba,channel");
        assert_eq!(lines[1], "70,1,off,50.5,15.75,66.25,4");
        assert_eq!(lines[2], "0,1,2,N/A,N/A,N/A,4");
        let mut buf = Vec::new();
        write_json(&rows, &mut buf).unwrap();
        let back: Vec<ConditionMetrics> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back[1].condition(), rows[1].condition());
    }

    proptest! {
        #[test]
        fn quantized_identity_is_exact(n in 0.0f64..130.0, s in 0.0f64..130.0) {
            let (n, s) = (quantize(n), quantize(s));
            let snr = s - n;
            prop_assert_eq!(snr + n, s);
            prop_assert_eq!(s - snr, n);
        }

        #[test]
        fn quantization_error_is_bounded(x in -200.0f64..200.0) {
            prop_assert!((quantize(x) - x).abs() <= LEVEL_QUANTUM / 2.0);
        }
    }
}
