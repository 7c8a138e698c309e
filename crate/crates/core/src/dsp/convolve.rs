use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{AudioBuffer, DspError};
use crate::scalar::Scalar;

const MIN_BLOCK: usize = 256;

/// Overlap-add FFT convolution of a mono signal with a multichannel kernel.
///
/// Kernel spectra are computed once; the signal block spectrum is shared by
/// all kernel channels.
pub struct FftConvolver<T: Scalar> {
    fft_len: usize,
    block_len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    spectra: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> FftConvolver<T> {
    /// Prepares a convolver for signals of roughly `expected_len` samples.
    pub fn new(kernels: &[Vec<T>], expected_len: usize) -> Result<Self, DspError> {
        let taps = kernels.first().map_or(0, Vec::len);
        if taps == 0 || kernels.iter().any(|k| k.len() != taps) {
            return Err(DspError::EmptyInput);
        }
        let block_hint = expected_len.clamp(1, taps.max(MIN_BLOCK));
        let fft_len = (taps + block_hint - 1).next_power_of_two();
        let block_len = fft_len - taps + 1;

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        let spectra = kernels
            .iter()
            .map(|k| {
                let mut spec: Vec<Complex<T>> = k.iter().map(|&v| Complex::new(v, T::zero())).collect();
                spec.resize(fft_len, Complex::new(T::zero(), T::zero()));
                forward.process(&mut spec);
                spec
            })
            .collect();

        Ok(Self { fft_len, block_len, forward, inverse, spectra })
    }

    /// Linear convolution of `signal` with every kernel, truncated to
    /// `signal.len()` samples.
    pub fn process(&self, signal: &[T]) -> Vec<Vec<T>> {
        let n = signal.len();
        let zero = Complex::new(T::zero(), T::zero());
        let norm = T::one() / T::from_usize(self.fft_len).unwrap();
        let mut out = vec![vec![T::zero(); n]; self.spectra.len()];
        let mut block = vec![zero; self.fft_len];
        let mut work = vec![zero; self.fft_len];

        for start in (0..n).step_by(self.block_len) {
            let end = (start + self.block_len).min(n);
            block.fill(zero);
            for (b, &s) in block.iter_mut().zip(&signal[start..end]) {
                b.re = s;
            }
            self.forward.process(&mut block);

            let valid = (n - start).min(self.fft_len);
            for (spec, out_ch) in self.spectra.iter().zip(out.iter_mut()) {
                for ((w, &x), &h) in work.iter_mut().zip(&block).zip(spec) {
                    *w = x * h;
                }
                self.inverse.process(&mut work);
                for (o, w) in out_ch[start..start + valid].iter_mut().zip(&work) {
                    *o = *o + w.re * norm;
                }
            }
        }
        out
    }
}

/// Convolves a mono `signal` with each channel of `ir`; the result keeps the
/// signal's length and the IR's channel count.
pub fn convolve<T: Scalar>(signal: &AudioBuffer<T>, ir: &AudioBuffer<T>) -> Result<AudioBuffer<T>, DspError> {
    if signal.channel_count() != 1 {
        return Err(DspError::NotMono(signal.channel_count()));
    }
    if signal.sample_rate() != ir.sample_rate() {
        return Err(DspError::RateMismatch {
            signal: signal.sample_rate(),
            ir: ir.sample_rate(),
        });
    }
    if ir.is_empty() {
        return Err(DspError::EmptyInput);
    }
    let convolver = FftConvolver::new(ir.channels(), signal.len())?;
    let channels = convolver.process(signal.channel(0).unwrap());
    Ok(AudioBuffer::from_parts(signal.sample_rate(), channels))
}
