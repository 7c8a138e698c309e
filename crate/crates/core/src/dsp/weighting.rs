use std::f64::consts::PI;
use std::marker::PhantomData;

use num_complex::Complex64;

use super::{AudioBuffer, DspError};
use crate::scalar::Scalar;

/// Lowest sample rate for which an A-weighting filter is designed.
pub const MIN_WEIGHTING_RATE: u32 = 8000;

// Pole frequencies of the analog A-weighting network (IEC 61672-1).
const F1: f64 = 20.598_997;
const F2: f64 = 107.652_65;
const F3: f64 = 737.862_23;
const F4: f64 = 12_194.217;

/// Frequency at which the high pole pair is pre-warped, used only when it
/// lies below a quarter of the sample rate.
const HIGH_POLE_MATCH_HZ: f64 = 8000.0;

/// Analytic A-weighting gain in dB, normalized to 0 dB at 1 kHz.
pub fn a_weighting_db(freq: f64) -> f64 {
    fn response(f: f64) -> f64 {
        let f2 = f * f;
        F4 * F4 * f2 * f2
            / ((f2 + F1 * F1) * ((f2 + F2 * F2) * (f2 + F3 * F3)).sqrt() * (f2 + F4 * F4))
    }
    20.0 * (response(freq) / response(1000.0)).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (1.0 + self.a[0] * z_inv + self.a[1] * z2)
    }
}

/// Cascaded second-order-section realization of the A-weighting curve.
///
/// Each pole of the analog network is mapped with the bilinear transform;
/// the four zeros at DC map to `z = 1` and the two excess poles add a double
/// zero at Nyquist. At rates where 8 kHz is below `fs / 4` the 12.2 kHz pole
/// pair is pre-warped to be exact at 8 kHz. Gain is renormalized so the
/// response at 1 kHz is exactly 0 dB.
#[derive(Debug, Clone)]
pub struct AWeightingFilter<T> {
    sample_rate: u32,
    sections: [Biquad; 3],
    poles: [f64; 6],
    _scalar: PhantomData<T>,
}

impl<T: Scalar> AWeightingFilter<T> {
    pub fn new(sample_rate: u32) -> Result<Self, DspError> {
        if sample_rate < MIN_WEIGHTING_RATE {
            return Err(DspError::UnsupportedRate(sample_rate));
        }
        let fs = sample_rate as f64;
        let k = 2.0 * fs;
        let bilinear = |hz: f64| {
            let w = 2.0 * PI * hz;
            (k - w) / (k + w)
        };
        let high = if HIGH_POLE_MATCH_HZ < fs / 4.0 {
            let theta = PI * HIGH_POLE_MATCH_HZ / fs;
            F4 * theta.tan() / theta
        } else {
            F4
        };
        let (p1, p2, p3, p4) = (bilinear(F1), bilinear(F2), bilinear(F3), bilinear(high));

        let mut sections = [
            Biquad { b: [1.0, -2.0, 1.0], a: [-2.0 * p1, p1 * p1] },
            Biquad { b: [1.0, -2.0, 1.0], a: [-(p2 + p3), p2 * p3] },
            Biquad { b: [1.0, 2.0, 1.0], a: [-2.0 * p4, p4 * p4] },
        ];
        let gain = cascade_response(&sections, 1000.0, fs).norm();
        for b in &mut sections[0].b {
            *b /= gain;
        }

        Ok(Self {
            sample_rate,
            sections,
            poles: [p1, p1, p2, p3, p4, p4],
            _scalar: PhantomData,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Digital magnitude response in dB at `freq` Hz.
    pub fn magnitude_db(&self, freq: f64) -> f64 {
        20.0 * cascade_response(&self.sections, freq, self.sample_rate as f64)
            .norm()
            .log10()
    }

    /// The six (real) z-plane poles.
    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn is_stable(&self) -> bool {
        self.poles.iter().all(|p| p.abs() < 1.0)
    }

    /// Filters one channel from rest.
    pub fn process(&self, input: &[T]) -> Vec<T> {
        let mut data: Vec<f64> = input.iter().map(|v| v.to_f64_lossy()).collect();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in data.iter_mut() {
                let x = *v;
                let y = s.b[0] * x + z1;
                z1 = s.b[1] * x - s.a[0] * y + z2;
                z2 = s.b[2] * x - s.a[1] * y;
                *v = y;
            }
        }
        data.into_iter().map(T::from_f64_lossy).collect()
    }
}

fn cascade_response(sections: &[Biquad], freq: f64, fs: f64) -> Complex64 {
    let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
    sections.iter().map(|s| s.response(z_inv)).product()
}

/// A-weights every channel of `buf`.
pub fn a_weight<T: Scalar>(buf: &AudioBuffer<T>) -> Result<AudioBuffer<T>, DspError> {
    let filter = AWeightingFilter::<T>::new(buf.sample_rate())?;
    let channels = buf.channels().iter().map(|c| filter.process(c)).collect();
    Ok(AudioBuffer::from_parts(buf.sample_rate(), channels))
}
