//! FMCW signal model: sensor configuration, scene description, raw data
//! synthesis and 3D-FFT processing into range-Doppler / range-angle maps.

mod config;
mod process;
mod scene;
mod synth;

pub use config::RadarConfig;
pub use process::{hann_window, process_cube};
pub use scene::{Category, GroundTruth, Scene, SceneObject};
pub use synth::{synthesize_frame, synthesize_targets, PointTarget};

use num_complex::Complex64;
use thiserror::Error;

use crate::map::RealMap;

#[derive(Debug, Error, PartialEq)]
pub enum RadarError {
    #[error("invalid radar configuration: {0}")]
    InvalidConfig(String),
    #[error("azimuth {azimuth_rad} rad has cos <= 0")]
    AngleOutOfRange { azimuth_rad: f64 },
    #[error("target at range {range_m:.3} m, azimuth {azimuth_rad:.3} rad is outside the field of view (max range {max_range_m} m)")]
    TargetOutOfRange {
        range_m: f64,
        azimuth_rad: f64,
        max_range_m: f64,
    },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    #[error("frame {0} has no raw cube")]
    MissingCube(usize),
}

/// Raw IF data cube, indexed `[antenna][chirp][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCube {
    antennas: usize,
    chirps: usize,
    samples: usize,
    data: Vec<Complex64>,
}

impl RadarCube {
    pub fn zeros(antennas: usize, chirps: usize, samples: usize) -> Self {
        Self {
            antennas,
            chirps,
            samples,
            data: vec![Complex64::new(0.0, 0.0); antennas * chirps * samples],
        }
    }

    /// Panics if `data.len()` does not match the dimensions.
    pub fn from_vec(antennas: usize, chirps: usize, samples: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), antennas * chirps * samples, "cube data length mismatch");
        Self {
            antennas,
            chirps,
            samples,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.antennas, self.chirps, self.samples)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, antenna: usize, chirp: usize, sample: usize) -> usize {
        (antenna * self.chirps + chirp) * self.samples + sample
    }

    #[inline]
    pub fn get(&self, antenna: usize, chirp: usize, sample: usize) -> Complex64 {
        self.data[self.offset(antenna, chirp, sample)]
    }

    /// One chirp's samples for one antenna.
    pub fn chirp(&self, antenna: usize, chirp: usize) -> &[Complex64] {
        let start = self.offset(antenna, chirp, 0);
        &self.data[start..start + self.samples]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

/// One radar frame: the raw cube and/or its processed magnitude maps.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    pub frame_index: usize,
    pub timestamp_s: f64,
    pub raw_cube: Option<RadarCube>,
    /// `samples_per_chirp x chirps_per_frame`, zero velocity at the center column.
    pub rd_map: Option<RealMap>,
    /// `samples_per_chirp x num_angle_bins`, boresight at the center column.
    pub ra_map: Option<RealMap>,
}
