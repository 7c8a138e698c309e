use serde::{Deserialize, Serialize};

use super::{a_weight, AudioBuffer, DspError};
use crate::scalar::Scalar;

/// Frame length used by the active-level estimator.
pub const ACTIVE_FRAME_SECONDS: f64 = 0.025;
/// Frames whose energy is more than this far below the loudest frame are
/// treated as pauses.
pub const ACTIVE_THRESHOLD_DB: f64 = 35.0;

/// Per-channel offsets (dB) converting A-weighted digital level (dBFS) into
/// A-weighted sound pressure level (dBA).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensitivityMap(Vec<f64>);

impl SensitivityMap {
    pub fn new(offsets: Vec<f64>) -> Result<Self, DspError> {
        if offsets.is_empty() {
            return Err(DspError::InvalidBuffer("sensitivity map has no channels".into()));
        }
        if let Some(i) = offsets.iter().position(|v| !v.is_finite()) {
            return Err(DspError::InvalidBuffer(format!(
                "sensitivity offset for channel {i} is not finite"
            )));
        }
        Ok(Self(offsets))
    }

    /// Same offset on every channel.
    pub fn uniform(channels: usize, offset: f64) -> Result<Self, DspError> {
        Self::new(vec![offset; channels])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn offset(&self, channel: usize) -> Result<f64, DspError> {
        self.0.get(channel).copied().ok_or(DspError::ChannelOutOfRange {
            channel,
            available: self.0.len(),
        })
    }

    pub fn offsets(&self) -> &[f64] {
        &self.0
    }

    pub fn set(&mut self, channel: usize, offset: f64) -> Result<(), DspError> {
        if !offset.is_finite() {
            return Err(DspError::InvalidBuffer("sensitivity offset is not finite".into()));
        }
        let available = self.0.len();
        let slot = self
            .0
            .get_mut(channel)
            .ok_or(DspError::ChannelOutOfRange { channel, available })?;
        *slot = offset;
        Ok(())
    }
}

/// `20·log10(rms)` of a slice; `-inf` for silence.
pub fn rms_db<T: Scalar>(samples: &[T]) -> f64 {
    10.0 * mean_square(samples).log10()
}

fn mean_square<T: Scalar>(samples: &[T]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>() / samples.len() as f64
}

/// A-weighted digital RMS level of one channel over the whole buffer, in dBFS.
pub fn a_weighted_level_db<T: Scalar>(buf: &AudioBuffer<T>, channel: usize) -> Result<f64, DspError> {
    let single = buf.select_channels(&[channel])?;
    let weighted = a_weight(&single)?;
    let ms = mean_square(weighted.channel(0).unwrap());
    if ms == 0.0 {
        return Err(DspError::SilentSignal);
    }
    Ok(10.0 * ms.log10())
}

/// A-weighted equivalent level of `channel` in dBA: full-duration RMS of the
/// A-weighted signal plus the channel's sensitivity offset.
pub fn equivalent_level<T: Scalar>(
    buf: &AudioBuffer<T>,
    sensitivity: &SensitivityMap,
    channel: usize,
) -> Result<f64, DspError> {
    let offset = sensitivity.offset(channel)?;
    Ok(a_weighted_level_db(buf, channel)? + offset)
}

/// A-weighted active level of one channel in dBFS.
///
/// The channel is split into 25 ms frames with 50% overlap; frames within
/// 35 dB of the loudest frame are averaged by energy. Signals shorter than one
/// frame are measured as a whole.
pub fn active_speech_level_db<T: Scalar>(buf: &AudioBuffer<T>, channel: usize) -> Result<f64, DspError> {
    let single = buf.select_channels(&[channel])?;
    let weighted = a_weight(&single)?;
    let x = weighted.channel(0).unwrap();
    let frame = ((ACTIVE_FRAME_SECONDS * buf.sample_rate() as f64).round() as usize).max(1);
    let hop = (frame / 2).max(1);

    let energies: Vec<f64> = if x.len() <= frame {
        vec![mean_square(x)]
    } else {
        (0..=(x.len() - frame))
            .step_by(hop)
            .map(|start| mean_square(&x[start..start + frame]))
            .collect()
    };
    let max = energies.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(DspError::SilentSignal);
    }
    let floor = max * 10f64.powf(-ACTIVE_THRESHOLD_DB / 10.0);
    let (sum, count) = energies
        .iter()
        .filter(|&&e| e >= floor)
        .fold((0.0, 0usize), |(s, c), &e| (s + e, c + 1));
    Ok(10.0 * (sum / count as f64).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_buf(freq: f64, amp: f64, secs: f64) -> AudioBuffer<f64> {
        let rate = 48000;
        let x = (0..(rate as f64 * secs) as usize)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect();
        AudioBuffer::mono(rate, x).unwrap()
    }

    #[test]
    fn full_scale_sine_reads_offset_minus_3db() {
        let buf = sine_buf(1000.0, 1.0, 2.0);
        let expected_94 = 20.0 * (1.0 / 2f64.sqrt()).log10() + 94.0;
        let level = equivalent_level(&buf, &SensitivityMap::uniform(1, 94.0).unwrap(), 0).unwrap();
        assert!((level - expected_94).abs() < 0.01, "{level}");
        assert!((level - 90.99).abs() < 0.01);
        let level64 = equivalent_level(&buf, &SensitivityMap::uniform(1, 64.0).unwrap(), 0).unwrap();
        assert!((level64 - 60.99).abs() < 0.01);
        assert!((level - level64 - 30.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_gain_adds_6_02_db() {
        let buf = sine_buf(300.0, 0.1, 0.5);
        let sens = SensitivityMap::uniform(1, 0.0).unwrap();
        let a = equivalent_level(&buf, &sens, 0).unwrap();
        let b = equivalent_level(&buf.scaled(2.0), &sens, 0).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-9);
        assert!((b - a - 6.02).abs() < 0.001);
    }

    #[test]
    fn silence_is_an_error() {
        let buf = AudioBuffer::<f64>::zeros(16000, 1, 1000).unwrap();
        let sens = SensitivityMap::uniform(1, 0.0).unwrap();
        assert_eq!(equivalent_level(&buf, &sens, 0).unwrap_err(), DspError::SilentSignal);
        assert_eq!(active_speech_level_db(&buf, 0).unwrap_err(), DspError::SilentSignal);
    }

    #[test]
    fn channel_must_exist_in_map() {
        let buf = sine_buf(1000.0, 0.5, 0.1);
        let sens = SensitivityMap::new(vec![]).map(|_| ()).unwrap_err();
        assert!(matches!(sens, DspError::InvalidBuffer(_)));
        let sens = SensitivityMap::uniform(1, 0.0).unwrap();
        assert!(matches!(
            equivalent_level(&buf, &sens, 1),
            Err(DspError::ChannelOutOfRange { channel: 1, .. })
        ));
    }

    #[test]
    fn active_level_ignores_pauses() {
        let tone = sine_buf(1000.0, 0.5, 1.0).into_channels().remove(0);
        let mut padded = vec![0.0; 48000];
        padded.extend_from_slice(&tone);
        padded.extend(std::iter::repeat(0.0).take(48000));
        let padded = AudioBuffer::mono(48000, padded).unwrap();
        let tone = AudioBuffer::mono(48000, tone).unwrap();
        let active = active_speech_level_db(&padded, 0).unwrap();
        let whole = a_weighted_level_db(&padded, 0).unwrap();
        let reference = active_speech_level_db(&tone, 0).unwrap();
        // Frames straddling the tone edges still pass the gate and pull the
        // estimate down slightly.
        assert!((active - reference).abs() < 0.25, "{active} vs {reference}");
        // Whole-file level is pulled down by the 2 s of silence (about 4.8 dB).
        assert!(active - whole > 4.0);
    }
}
