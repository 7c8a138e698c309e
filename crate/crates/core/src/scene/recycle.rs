//! Looping and excerpting of stationary recordings to a target length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{AudioBuffer, DspError};
use crate::scalar::Scalar;

/// Seam crossfade duration.
pub const CROSSFADE_SECONDS: f64 = 0.1;

/// Crossfade length in samples at `sample_rate`.
pub fn crossfade_len(sample_rate: u32) -> usize {
    (CROSSFADE_SECONDS * sample_rate as f64).round() as usize
}

/// How a clip of a given length is stretched to a target length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecycleMode {
    /// Clip at least as long as the target: contiguous excerpt.
    Excerpt,
    /// Loop with a linear crossfade of the given length at each seam.
    Crossfade(usize),
    /// Clip shorter than two crossfades: plain concatenation.
    Concatenate,
}

impl RecycleMode {
    pub fn for_lengths(clip_len: usize, target_len: usize, crossfade: usize) -> Self {
        if clip_len >= target_len {
            RecycleMode::Excerpt
        } else if crossfade > 0 && clip_len >= 2 * crossfade {
            RecycleMode::Crossfade(crossfade)
        } else {
            RecycleMode::Concatenate
        }
    }

    /// Number of valid start offsets.
    fn offset_count(self, clip_len: usize, target_len: usize) -> usize {
        match self {
            RecycleMode::Excerpt => clip_len - target_len + 1,
            RecycleMode::Crossfade(f) => clip_len - f,
            RecycleMode::Concatenate => clip_len,
        }
    }
}

/// Start offset drawn from `seed`, uniform over the valid offsets.
pub fn recycle_offset(clip_len: usize, target_len: usize, crossfade: usize, seed: u64) -> usize {
    let mode = RecycleMode::for_lengths(clip_len, target_len, crossfade);
    let count = mode.offset_count(clip_len, target_len);
    if count <= 1 {
        return 0;
    }
    ChaCha8Rng::seed_from_u64(seed).random_range(0..count)
}

/// Stretch or cut `clip` to exactly `target_len` samples, starting at an
/// offset drawn from `seed`.
pub fn recycle<T: Scalar>(clip: &AudioBuffer<T>, target_len: usize, seed: u64) -> Result<AudioBuffer<T>, DspError> {
    let offset = recycle_offset(clip.len(), target_len, crossfade_len(clip.sample_rate()), seed);
    recycle_from(clip, target_len, offset)
}

/// [`recycle`] with an explicit start offset.
pub fn recycle_from<T: Scalar>(
    clip: &AudioBuffer<T>,
    target_len: usize,
    offset: usize,
) -> Result<AudioBuffer<T>, DspError> {
    let len = clip.len();
    if len == 0 {
        return Err(DspError::EmptyInput);
    }
    let mode = RecycleMode::for_lengths(len, target_len, crossfade_len(clip.sample_rate()));
    let count = mode.offset_count(len, target_len);
    if offset >= count {
        return Err(DspError::InvalidBuffer(format!(
            "recycle offset {offset} out of range (0..{count})"
        )));
    }
    let channels = clip
        .channels()
        .iter()
        .map(|ch| match mode {
            RecycleMode::Excerpt => ch[offset..offset + target_len].to_vec(),
            RecycleMode::Concatenate => (0..target_len).map(|n| ch[(n + offset) % len]).collect(),
            RecycleMode::Crossfade(fade) => looped(ch, fade, offset, target_len),
        })
        .collect();
    AudioBuffer::new(clip.sample_rate(), channels)
}

fn looped<T: Scalar>(clip: &[T], fade: usize, offset: usize, target_len: usize) -> Vec<T> {
    let period = clip.len() - fade;
    let ramp: Vec<T> = (0..fade)
        .map(|i| T::from_f64_lossy((i + 1) as f64 / (fade + 1) as f64))
        .collect();
    (offset..offset + target_len)
        .map(|t| {
            let (pass, i) = (t / period, t % period);
            if pass > 0 && i < fade {
                let g = ramp[i];
                clip[period + i] * (T::one() - g) + clip[i] * g
            } else {
                clip[i]
            }
        })
        .collect()
}
