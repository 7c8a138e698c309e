use std::ops::Range;

use super::DspError;
use crate::scalar::Scalar;

/// Multichannel, full-scale-normalized sample data at a fixed rate.
///
/// All channels share one length, there is at least one channel and every
/// sample is finite. Buffers are never mutated in place by the kernels;
/// operations return new buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    sample_rate: u32,
    channels: Vec<Vec<T>>,
}

impl<T: Scalar> AudioBuffer<T> {
    pub fn new(sample_rate: u32, channels: Vec<Vec<T>>) -> Result<Self, DspError> {
        if sample_rate == 0 {
            return Err(DspError::InvalidRate(sample_rate));
        }
        let Some(first) = channels.first() else {
            return Err(DspError::InvalidBuffer("at least one channel is required".into()));
        };
        let len = first.len();
        if let Some((i, ch)) = channels.iter().enumerate().find(|(_, ch)| ch.len() != len) {
            return Err(DspError::InvalidBuffer(format!(
                "channel {i} has {} samples, channel 0 has {len}",
                ch.len()
            )));
        }
        for (i, ch) in channels.iter().enumerate() {
            if let Some(n) = ch.iter().position(|v| !v.is_finite()) {
                return Err(DspError::InvalidBuffer(format!(
                    "non-finite sample at channel {i}, index {n}"
                )));
            }
        }
        Ok(Self { sample_rate, channels })
    }

    pub fn mono(sample_rate: u32, samples: Vec<T>) -> Result<Self, DspError> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn zeros(sample_rate: u32, channel_count: usize, len: usize) -> Result<Self, DspError> {
        if channel_count == 0 {
            return Err(DspError::InvalidBuffer("at least one channel is required".into()));
        }
        Self::new(sample_rate, vec![vec![T::zero(); len]; channel_count])
    }

    /// Builds a buffer from channels already known to satisfy the invariants.
    pub(crate) fn from_parts(sample_rate: u32, channels: Vec<Vec<T>>) -> Self {
        debug_assert!(sample_rate > 0 && !channels.is_empty());
        debug_assert!(channels.iter().all(|c| c.len() == channels[0].len()));
        Self { sample_rate, channels }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> Option<&[T]> {
        self.channels.get(index).map(Vec::as_slice)
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<T>> {
        self.channels
    }

    pub fn check_channel(&self, channel: usize) -> Result<&[T], DspError> {
        self.channel(channel).ok_or(DspError::ChannelOutOfRange {
            channel,
            available: self.channel_count(),
        })
    }

    /// New buffer holding the listed channels in the given order.
    pub fn select_channels(&self, indices: &[usize]) -> Result<Self, DspError> {
        if indices.is_empty() {
            return Err(DspError::InvalidBuffer("channel selection is empty".into()));
        }
        let channels = indices
            .iter()
            .map(|&i| self.check_channel(i).map(<[T]>::to_vec))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_parts(self.sample_rate, channels))
    }

    /// Sample range `range` of every channel.
    pub fn slice(&self, range: Range<usize>) -> Result<Self, DspError> {
        if range.start > range.end || range.end > self.len() {
            return Err(DspError::InvalidBuffer(format!(
                "slice {range:?} outside buffer of length {}",
                self.len()
            )));
        }
        let channels = self.channels.iter().map(|c| c[range.clone()].to_vec()).collect();
        Ok(Self::from_parts(self.sample_rate, channels))
    }

    pub fn scaled(&self, gain: T) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|c| c.iter().map(|&v| v * gain).collect())
            .collect();
        Self::from_parts(self.sample_rate, channels)
    }

    /// Samplewise sum `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self, DspError> {
        if self.sample_rate != other.sample_rate
            || self.channel_count() != other.channel_count()
            || self.len() != other.len()
        {
            return Err(DspError::InvalidBuffer(format!(
                "cannot add {}ch x {} @ {} Hz to {}ch x {} @ {} Hz",
                other.channel_count(),
                other.len(),
                other.sample_rate,
                self.channel_count(),
                self.len(),
                self.sample_rate
            )));
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x + y).collect())
            .collect();
        Ok(Self::from_parts(self.sample_rate, channels))
    }

    /// Largest absolute sample value over all channels.
    pub fn peak(&self) -> T {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn is_silent(&self) -> bool {
        self.channels.iter().all(|c| c.iter().all(|v| v.is_zero()))
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> AudioBuffer<U> {
        let channels = self
            .channels
            .iter()
            .map(|c| c.iter().map(|&v| U::from_f64_lossy(v.to_f64_lossy())).collect())
            .collect();
        AudioBuffer::from_parts(self.sample_rate, channels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_channels() {
        let err = AudioBuffer::<f64>::new(16000, vec![vec![0.0; 3], vec![0.0; 2]]).unwrap_err();
        assert!(matches!(err, DspError::InvalidBuffer(_)));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(AudioBuffer::mono(16000, vec![0.0, f64::NAN]).is_err());
        assert!(AudioBuffer::mono(16000, vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn rejects_zero_rate_and_no_channels() {
        assert_eq!(
            AudioBuffer::<f64>::mono(0, vec![0.0]).unwrap_err(),
            DspError::InvalidRate(0)
        );
        assert!(AudioBuffer::<f64>::new(16000, vec![]).is_err());
    }

    #[test]
    fn select_preserves_order() {
        let buf = AudioBuffer::new(8000, vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let sel = buf.select_channels(&[2, 0]).unwrap();
        assert_eq!(sel.channels(), &[vec![2.0], vec![0.0]]);
        assert!(buf.select_channels(&[3]).is_err());
    }

    #[test]
    fn add_requires_matching_shape() {
        let a = AudioBuffer::<f64>::zeros(8000, 2, 4).unwrap();
        let b = AudioBuffer::<f64>::zeros(8000, 2, 5).unwrap();
        assert!(a.add(&b).is_err());
        assert_eq!(a.add(&a).unwrap(), a);
    }
}
