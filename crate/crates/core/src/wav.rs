//! RIFF/WAVE reading and writing for PCM 16/24-bit integer and 32-bit float.

use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use thiserror::Error;

use crate::dsp::{AudioBuffer, DspError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: unsupported format ({detail})")]
    Unsupported { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: DspError,
    },
}

/// Sample encodings that can be written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavFormat {
    Pcm16,
    #[default]
    Pcm24,
    Float32,
}

impl WavFormat {
    fn spec(self, channels: u16, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavFormat::Pcm16 => (16, SampleFormat::Int),
            WavFormat::Pcm24 => (24, SampleFormat::Int),
            WavFormat::Float32 => (32, SampleFormat::Float),
        };
        WavSpec { channels, sample_rate, bits_per_sample, sample_format }
    }
}

/// Header fields of a WAV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub sample_rate: u32,
    pub channels: u16,
    pub bits_per_sample: u16,
    pub float: bool,
    /// Samples per channel.
    pub frames: u32,
}

impl WavInfo {
    /// Smallest magnitude that counts as full scale for this encoding: the
    /// largest positive integer code for PCM, 1.0 for float.
    pub fn full_scale(&self) -> f64 {
        if self.float {
            1.0
        } else {
            let scale = (1u64 << (self.bits_per_sample - 1)) as f64;
            (scale - 1.0) / scale
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(hound::Error) -> WavError + '_ {
    move |source| WavError::Io { path: path.to_path_buf(), source }
}

pub fn read_info(path: impl AsRef<Path>) -> Result<WavInfo, WavError> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(io_err(path))?;
    let spec = reader.spec();
    Ok(WavInfo {
        sample_rate: spec.sample_rate,
        channels: spec.channels,
        bits_per_sample: spec.bits_per_sample,
        float: spec.sample_format == SampleFormat::Float,
        frames: reader.duration(),
    })
}

/// Decodes a WAV file; integer codes are divided by `2^(bits-1)`.
pub fn read_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioBuffer<T>, WavError> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(io_err(path))?;
    let spec = reader.spec();
    let channel_count = spec.channels as usize;
    if channel_count == 0 {
        return Err(WavError::Unsupported { path: path.into(), detail: "zero channels".into() });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(io_err(path))?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(io_err(path))?
        }
        (fmt, bits) => {
            return Err(WavError::Unsupported {
                path: path.into(),
                detail: format!("{bits}-bit {fmt:?}"),
            })
        }
    };
    let frames = interleaved.len() / channel_count;
    let mut channels = vec![Vec::with_capacity(frames); channel_count];
    for frame in interleaved.chunks_exact(channel_count) {
        for (ch, &v) in channels.iter_mut().zip(frame) {
            ch.push(T::from_f64_lossy(v));
        }
    }
    AudioBuffer::new(spec.sample_rate, channels)
        .map_err(|source| WavError::Invalid { path: path.into(), source })
}

/// Encodes `buf`; integer formats round and saturate at the code range.
pub fn write_wav<T: Scalar>(
    path: impl AsRef<Path>,
    buf: &AudioBuffer<T>,
    format: WavFormat,
) -> Result<(), WavError> {
    let path = path.as_ref();
    let channels = u16::try_from(buf.channel_count()).map_err(|_| WavError::Unsupported {
        path: path.into(),
        detail: format!("{} channels", buf.channel_count()),
    })?;
    let spec = format.spec(channels, buf.sample_rate());
    let mut writer = WavWriter::create(path, spec).map_err(io_err(path))?;
    let data = buf.channels();
    match format {
        WavFormat::Float32 => {
            for n in 0..buf.len() {
                for ch in data {
                    writer.write_sample(ch[n].to_f64_lossy() as f32).map_err(io_err(path))?;
                }
            }
        }
        WavFormat::Pcm16 | WavFormat::Pcm24 => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            let (lo, hi) = (-scale, scale - 1.0);
            if format == WavFormat::Pcm16 {
                let mut w = writer.get_i16_writer(buf.len() as u32 * channels as u32);
                for n in 0..buf.len() {
                    for ch in data {
                        w.write_sample((ch[n].to_f64_lossy() * scale).round().clamp(lo, hi) as i16);
                    }
                }
                w.flush().map_err(io_err(path))?;
            } else {
                for n in 0..buf.len() {
                    for ch in data {
                        let code = (ch[n].to_f64_lossy() * scale).round().clamp(lo, hi) as i32;
                        writer.write_sample(code).map_err(io_err(path))?;
                    }
                }
            }
        }
    }
    writer.finalize().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pcm24_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let x: Vec<f64> = (0..500).map(|i| ((i as f64) * 0.05).sin() * 0.9).collect();
        let buf = AudioBuffer::new(16000, vec![x.clone(), x.iter().map(|v| -v).collect()]).unwrap();
        write_wav(&path, &buf, WavFormat::Pcm24).unwrap();
        let info = read_info(&path).unwrap();
        assert_eq!(
            info,
            WavInfo { sample_rate: 16000, channels: 2, bits_per_sample: 24, float: false, frames: 500 }
        );
        let back: AudioBuffer<f64> = read_wav(&path).unwrap();
        for (a, b) in back.channels().iter().flatten().zip(buf.channels().iter().flatten()) {
            assert!((a - b).abs() <= 0.5 / 8_388_608.0 + 1e-15);
        }
    }

    #[test]
    fn integer_formats_saturate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.wav");
        let buf = AudioBuffer::mono(8000, vec![1.5f64, -1.5, 1.0]).unwrap();
        write_wav(&path, &buf, WavFormat::Pcm16).unwrap();
        let back: AudioBuffer<f64> = read_wav(&path).unwrap();
        let ch = back.channel(0).unwrap();
        assert_eq!(ch[0], 32767.0 / 32768.0);
        assert_eq!(ch[1], -1.0);
        assert_eq!(ch[2], 32767.0 / 32768.0);
        assert_eq!(read_info(&path).unwrap().full_scale(), 32767.0 / 32768.0);
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_wav::<f64>("/nonexistent/x.wav").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.wav"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn float32_round_trip_is_exact_for_f32_values(x in prop::collection::vec(-1.0f32..1.0, 1..200)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("f.wav");
            let buf = AudioBuffer::mono(22050, x.clone()).unwrap();
            write_wav(&path, &buf, WavFormat::Float32).unwrap();
            let back: AudioBuffer<f32> = read_wav(&path).unwrap();
            prop_assert_eq!(back, buf);
        }
    }
}
