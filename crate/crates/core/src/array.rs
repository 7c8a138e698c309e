//! Microphone geometry and far-field steering vectors.
//!
//! Steering entries use the convention
//! `a(f, θ, m) = exp(+j·2π·f·⟨p_m − c, u(θ)⟩ / c_sound)` where `u(θ)` is the
//! unit vector towards the source in the horizontal plane and `c` the array
//! centroid, so microphones closer to the source get positive phase. For a
//! circular array this is `exp(+j·2π·f·r·cos(θ − φ_m)/c_sound)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
const MATRIX_MAGIC: &[u8; 8] = b"STEERMAT";

#[derive(Debug, Error)]
pub enum ArrayError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("frequencies must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("azimuths must be finite")]
    InvalidAzimuth,
    #[error("malformed steering matrix file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Microphone positions in metres plus the propagation speed.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry<T> {
    positions: Vec<[T; 3]>,
    speed_of_sound: T,
}

impl<T: Scalar> ArrayGeometry<T> {
    pub fn new(positions: Vec<[T; 3]>, speed_of_sound: T) -> Result<Self, ArrayError> {
        if positions.is_empty() {
            return Err(ArrayError::InvalidGeometry("no microphones".into()));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ArrayError::InvalidGeometry("non-finite coordinate".into()));
        }
        if !(speed_of_sound.is_finite() && speed_of_sound > T::zero()) {
            return Err(ArrayError::InvalidGeometry(format!(
                "speed of sound must be positive, got {speed_of_sound}"
            )));
        }
        Ok(Self { positions, speed_of_sound })
    }

    /// `mics` microphones uniformly spaced on a horizontal circle of `radius`
    /// around `center`, mic 0 at azimuth 0 and increasing counter-clockwise.
    pub fn circular(mics: usize, radius: T, center: [T; 3]) -> Result<Self, ArrayError> {
        if mics == 0 || !(radius > T::zero()) {
            return Err(ArrayError::InvalidGeometry("circular array needs mics > 0 and radius > 0".into()));
        }
        let step = T::TAU() / T::from_usize(mics).unwrap();
        let positions = (0..mics)
            .map(|m| {
                let phi = step * T::from_usize(m).unwrap();
                [center[0] + radius * phi.cos(), center[1] + radius * phi.sin(), center[2]]
            })
            .collect();
        Self::new(positions, T::from_f64_lossy(DEFAULT_SPEED_OF_SOUND))
    }

    pub fn with_speed_of_sound(mut self, speed_of_sound: T) -> Result<Self, ArrayError> {
        self.speed_of_sound = speed_of_sound;
        Self::new(self.positions, speed_of_sound)
    }

    pub fn positions(&self) -> &[[T; 3]] {
        &self.positions
    }

    pub fn mic_count(&self) -> usize {
        self.positions.len()
    }

    pub fn speed_of_sound(&self) -> T {
        self.speed_of_sound
    }

    pub fn centroid(&self) -> [T; 3] {
        let n = T::from_usize(self.positions.len()).unwrap();
        let mut c = [T::zero(); 3];
        for p in &self.positions {
            for k in 0..3 {
                c[k] = c[k] + p[k];
            }
        }
        c.map(|v| v / n)
    }

    /// In-plane radius and azimuth of each microphone relative to the centroid.
    pub fn polar(&self) -> Vec<(T, T)> {
        let c = self.centroid();
        self.positions
            .iter()
            .map(|p| {
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                (dx.hypot(dy), dy.atan2(dx))
            })
            .collect()
    }

    /// Whether the microphones lie on one horizontal circle with uniform
    /// angular spacing, within `tol` metres / radians.
    pub fn is_uniform_circular(&self, tol: T) -> bool {
        let c = self.centroid();
        if self.positions.iter().any(|p| (p[2] - c[2]).abs() > tol) {
            return false;
        }
        let polar = self.polar();
        let r0 = polar[0].0;
        let step = T::TAU() / T::from_usize(polar.len()).unwrap();
        polar.iter().enumerate().all(|(m, &(r, phi))| {
            let expected = polar[0].1 + step * T::from_usize(m).unwrap();
            let diff = (phi - expected).sin().atan2((phi - expected).cos());
            (r - r0).abs() <= tol && diff.abs() <= tol
        })
    }

    /// Signed path-length advance of each microphone towards a far-field
    /// source at `azimuth`, relative to the centroid.
    fn projections(&self, azimuth: T) -> Vec<T> {
        let c = self.centroid();
        let (ux, uy) = (azimuth.cos(), azimuth.sin());
        self.positions
            .iter()
            .map(|p| (p[0] - c[0]) * ux + (p[1] - c[1]) * uy)
            .collect()
    }
}

/// Steering entries indexed `(frequency, azimuth, mic)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix<T> {
    frequencies: Vec<T>,
    azimuths: Vec<T>,
    mics: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> SteeringMatrix<T> {
    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    pub fn azimuths(&self) -> &[T] {
        &self.azimuths
    }

    /// `(frequencies, azimuths, mics)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.frequencies.len(), self.azimuths.len(), self.mics)
    }

    pub fn get(&self, freq: usize, azimuth: usize, mic: usize) -> Complex<T> {
        self.entries[(freq * self.azimuths.len() + azimuth) * self.mics + mic]
    }

    /// Steering vector over microphones for one (frequency, azimuth) pair.
    pub fn vector(&self, freq: usize, azimuth: usize) -> &[Complex<T>] {
        let start = (freq * self.azimuths.len() + azimuth) * self.mics;
        &self.entries[start..start + self.mics]
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    /// Writes the binary export: 8-byte magic, little-endian `u64` header
    /// length, a JSON header describing shape and axes, then interleaved
    /// `f64` real/imaginary pairs in row-major `(frequency, azimuth, mic)`
    /// order.
    pub fn write_to(&self, path: impl AsRef<Path>, speed_of_sound: f64) -> Result<(), ArrayError> {
        let header = MatrixHeader {
            shape: [self.frequencies.len(), self.azimuths.len(), self.mics],
            axes: ["frequency_hz".into(), "azimuth_rad".into(), "mic".into()],
            dtype: "complex128-le".into(),
            frequencies_hz: self.frequencies.iter().map(|v| v.to_f64_lossy()).collect(),
            azimuths_rad: self.azimuths.iter().map(|v| v.to_f64_lossy()).collect(),
            speed_of_sound,
        };
        let json = serde_json::to_vec(&header).map_err(|e| ArrayError::Malformed(e.to_string()))?;
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        for e in &self.entries {
            out.write_all(&e.re.to_f64_lossy().to_le_bytes())?;
            out.write_all(&e.im.to_f64_lossy().to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a file produced by [`SteeringMatrix::write_to`].
    pub fn read_from(path: impl AsRef<Path>) -> Result<(Self, MatrixHeader), ArrayError> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MATRIX_MAGIC {
            return Err(ArrayError::Malformed("bad magic".into()));
        }
        let mut len = [0u8; 8];
        input.read_exact(&mut len)?;
        let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
        input.read_exact(&mut json)?;
        let header: MatrixHeader =
            serde_json::from_slice(&json).map_err(|e| ArrayError::Malformed(e.to_string()))?;
        let [nf, na, nm] = header.shape;
        if header.frequencies_hz.len() != nf || header.azimuths_rad.len() != na {
            return Err(ArrayError::Malformed("axis lengths disagree with shape".into()));
        }
        let mut raw = Vec::new();
        input.read_to_end(&mut raw)?;
        if raw.len() != nf * na * nm * 16 {
            return Err(ArrayError::Malformed(format!(
                "expected {} data bytes, found {}",
                nf * na * nm * 16,
                raw.len()
            )));
        }
        let entries = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex::new(T::from_f64_lossy(re), T::from_f64_lossy(im))
            })
            .collect();
        let matrix = Self {
            frequencies: header.frequencies_hz.iter().map(|&v| T::from_f64_lossy(v)).collect(),
            azimuths: header.azimuths_rad.iter().map(|&v| T::from_f64_lossy(v)).collect(),
            mics: nm,
            entries,
        };
        Ok((matrix, header))
    }
}

/// JSON header of the steering-matrix export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub shape: [usize; 3],
    pub axes: [String; 3],
    pub dtype: String,
    pub frequencies_hz: Vec<f64>,
    pub azimuths_rad: Vec<f64>,
    pub speed_of_sound: f64,
}

/// Far-field plane-wave steering vectors in the array plane.
pub fn steering_vectors<T: Scalar>(
    geom: &ArrayGeometry<T>,
    frequencies: &[T],
    azimuths: &[T],
) -> Result<SteeringMatrix<T>, ArrayError> {
    if let Some(f) = frequencies.iter().find(|f| !(f.is_finite() && **f > T::zero())) {
        return Err(ArrayError::InvalidFrequency(f.to_f64_lossy()));
    }
    if azimuths.iter().any(|a| !a.is_finite()) {
        return Err(ArrayError::InvalidAzimuth);
    }
    let projections: Vec<Vec<T>> = azimuths.iter().map(|&a| geom.projections(a)).collect();
    let mut entries = Vec::with_capacity(frequencies.len() * azimuths.len() * geom.mic_count());
    for &f in frequencies {
        let k = T::TAU() * f / geom.speed_of_sound;
        for proj in &projections {
            entries.extend(proj.iter().map(|&d| Complex::from_polar(T::one(), k * d)));
        }
    }
    Ok(SteeringMatrix {
        frequencies: frequencies.to_vec(),
        azimuths: azimuths.to_vec(),
        mics: geom.mic_count(),
        entries,
    })
}

/// Arrival time of a far-field wavefront from `azimuth` at each microphone,
/// relative to the centroid (negative = earlier). Steering phases equal
/// `-2π·f·delay`.
pub fn pairwise_delays<T: Scalar>(geom: &ArrayGeometry<T>, azimuth: T) -> Vec<T> {
    geom.projections(azimuth)
        .into_iter()
        .map(|d| -d / geom.speed_of_sound)
        .collect()
}
