use std::f64::consts::PI;

use super::{AudioBuffer, DspError};
use crate::scalar::Scalar;

/// Passband edge of the anti-aliasing/anti-imaging filter, as a fraction of
/// the lower of the two rates.
const CUTOFF: f64 = 0.45;
/// Full transition width, as a fraction of the lower rate, centred on the cutoff.
const TRANSITION: f64 = 0.05;
const STOPBAND_DB: f64 = 80.0;
/// Above this many polyphase branches the kernel is evaluated per sample
/// instead of tabulated.
const MAX_TABLE_PHASES: u64 = 4096;

/// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
#[derive(Debug, Clone)]
pub struct Resampler {
    input_rate: u32,
    output_rate: u32,
    up: u64,
    down: u64,
    cutoff: f64,
    half_width: usize,
    beta: f64,
    i0_beta: f64,
    table: Option<Vec<Vec<f64>>>,
}

impl Resampler {
    pub fn new(input_rate: u32, output_rate: u32) -> Result<Self, DspError> {
        if input_rate == 0 {
            return Err(DspError::InvalidRate(input_rate));
        }
        if output_rate == 0 {
            return Err(DspError::InvalidRate(output_rate));
        }
        let g = gcd(input_rate as u64, output_rate as u64);
        let up = output_rate as u64 / g;
        let down = input_rate as u64 / g;

        // All frequencies below are in cycles per input sample.
        let scale = input_rate.min(output_rate) as f64 / input_rate as f64;
        let cutoff = CUTOFF * scale;
        let transition = TRANSITION * scale;
        let beta = 0.1102 * (STOPBAND_DB - 8.7);
        let taps = ((STOPBAND_DB - 8.0) / (2.285 * 2.0 * PI * transition)).ceil() + 1.0;
        let half_width = (taps / 2.0).ceil() as usize;

        let mut resampler = Self {
            input_rate,
            output_rate,
            up,
            down,
            cutoff,
            half_width,
            beta,
            i0_beta: bessel_i0(beta),
            table: None,
        };
        if up <= MAX_TABLE_PHASES {
            resampler.table = Some((0..up).map(|p| resampler.branch(p)).collect());
        }
        Ok(resampler)
    }

    pub fn input_rate(&self) -> u32 {
        self.input_rate
    }

    pub fn output_rate(&self) -> u32 {
        self.output_rate
    }

    /// `round(input_len * output_rate / input_rate)`.
    pub fn output_len(&self, input_len: usize) -> usize {
        let num = input_len as u128 * self.output_rate as u128;
        let den = self.input_rate as u128;
        ((num + den / 2) / den) as usize
    }

    /// Number of input samples on either side of the interpolation point.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Kernel taps for the branch at fractional position `phase / up`,
    /// covering input offsets `1 - half_width ..= half_width`.
    fn branch(&self, phase: u64) -> Vec<f64> {
        let frac = phase as f64 / self.up as f64;
        let hw = self.half_width as isize;
        let mut taps: Vec<f64> = (1 - hw..=hw).map(|j| self.kernel(j as f64 - frac)).collect();
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        taps
    }

    fn kernel(&self, tau: f64) -> f64 {
        let u = tau / self.half_width as f64;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(self.beta * (1.0 - u * u).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc(2.0 * self.cutoff * tau) * window
    }

    pub fn process<T: Scalar>(&self, input: &[T]) -> Vec<T> {
        if self.input_rate == self.output_rate {
            return input.to_vec();
        }
        let out_len = self.output_len(input.len());
        let hw = self.half_width as isize;
        let n_in = input.len() as isize;
        let mut out = Vec::with_capacity(out_len);
        let mut scratch;
        for n in 0..out_len as u64 {
            let pos = n * self.down;
            let base = (pos / self.up) as isize;
            let phase = pos % self.up;
            let taps: &[f64] = match &self.table {
                Some(table) => &table[phase as usize],
                None => {
                    scratch = self.branch(phase);
                    &scratch
                }
            };
            let lo = (base + 1 - hw).max(0);
            let hi = (base + hw).min(n_in - 1);
            let mut acc = 0.0f64;
            for k in lo..=hi {
                acc += input[k as usize].to_f64_lossy() * taps[(k - base + hw - 1) as usize];
            }
            out.push(T::from_f64_lossy(acc));
        }
        out
    }
}

/// Converts `buf` to `target_rate` with band-limited interpolation.
///
/// The output has `round(len * target_rate / rate)` samples per channel. When
/// the rates are equal the input is returned unchanged.
pub fn resample<T: Scalar>(buf: &AudioBuffer<T>, target_rate: u32) -> Result<AudioBuffer<T>, DspError> {
    if target_rate == 0 {
        return Err(DspError::InvalidRate(target_rate));
    }
    if buf.is_empty() {
        return Err(DspError::EmptyInput);
    }
    if target_rate == buf.sample_rate() {
        return Ok(buf.clone());
    }
    let resampler = Resampler::new(buf.sample_rate(), target_rate)?;
    let channels = buf.channels().iter().map(|c| resampler.process(c)).collect();
    Ok(AudioBuffer::from_parts(target_rate, channels))
}

/// Mean over channels. Mono input is returned unchanged.
pub fn downmix<T: Scalar>(buf: &AudioBuffer<T>) -> AudioBuffer<T> {
    if buf.channel_count() == 1 {
        return buf.clone();
    }
    let count = T::from_usize(buf.channel_count()).unwrap();
    let mixed = (0..buf.len())
        .map(|n| {
            buf.channels()
                .iter()
                .fold(T::zero(), |acc, c| acc + c[n])
                / count
        })
        .collect();
    AudioBuffer::from_parts(buf.sample_rate(), vec![mixed])
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
