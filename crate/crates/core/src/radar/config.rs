use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::RadarError;

pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Sensor parameters.
///
/// Defaults reproduce the processed grid of a 77 GHz, 8-virtual-antenna
/// automotive sensor: 256 range bins of ~0.20 m, 64 Doppler bins of 0.42 m/s
/// and 256 zero-padded angle bins. `bandwidth_hz` is the *effective* processed
/// bandwidth (0.75 GHz gives the 0.20 m bin), not the nominal 4 GHz sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub sweep_period_s: f64,
    pub chirps_per_frame: usize,
    pub samples_per_chirp: usize,
    pub num_rx_virtual: usize,
    pub antenna_spacing_m: f64,
    /// Duration of the chirp train; sets the velocity resolution.
    pub frame_period_s: f64,
    pub num_angle_bins: usize,
    pub max_range_m: f64,
    pub speed_of_light_m_s: f64,
    /// Multiplier `k` in the inter-antenna phase `2π f_c k h sin(α) / c`.
    pub angle_phase_factor: f64,
    /// Hann window on the range and Doppler axes before the FFT.
    pub apply_window: bool,
}

impl Default for RadarConfig {
    fn default() -> Self {
        let fc = 77e9;
        let wavelength = SPEED_OF_LIGHT / fc;
        Self {
            carrier_frequency_hz: fc,
            bandwidth_hz: 0.75e9,
            sweep_period_s: 60e-6,
            chirps_per_frame: 64,
            samples_per_chirp: 256,
            num_rx_virtual: 8,
            // with angle_phase_factor = 2 this places sin(α) = ±1 on the edge bins
            antenna_spacing_m: wavelength / 4.0,
            frame_period_s: SPEED_OF_LIGHT / (2.0 * fc * 0.42),
            num_angle_bins: 256,
            max_range_m: 50.0,
            speed_of_light_m_s: SPEED_OF_LIGHT,
            angle_phase_factor: 2.0,
            apply_window: true,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<(), RadarError> {
        let positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("sweep_period_s", self.sweep_period_s),
            ("antenna_spacing_m", self.antenna_spacing_m),
            ("frame_period_s", self.frame_period_s),
            ("max_range_m", self.max_range_m),
            ("speed_of_light_m_s", self.speed_of_light_m_s),
            ("angle_phase_factor", self.angle_phase_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(RadarError::InvalidConfig(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let pow2 = [
            ("chirps_per_frame", self.chirps_per_frame),
            ("samples_per_chirp", self.samples_per_chirp),
            ("num_angle_bins", self.num_angle_bins),
        ];
        for (name, v) in pow2 {
            if v < 2 || !v.is_power_of_two() {
                return Err(RadarError::InvalidConfig(format!("{name} must be a power of two >= 2, got {v}")));
            }
        }
        if self.num_rx_virtual == 0 {
            return Err(RadarError::InvalidConfig("num_rx_virtual must be >= 1".into()));
        }
        if self.num_angle_bins < self.num_rx_virtual {
            return Err(RadarError::InvalidConfig(format!(
                "num_angle_bins ({}) must be >= num_rx_virtual ({})",
                self.num_angle_bins, self.num_rx_virtual
            )));
        }
        let coverage = self.samples_per_chirp as f64 * self.range_resolution();
        if self.max_range_m > coverage * (1.0 + 1e-9) {
            return Err(RadarError::InvalidConfig(format!(
                "max_range_m ({}) exceeds range-bin coverage ({coverage:.3} m)",
                self.max_range_m
            )));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        self.speed_of_light_m_s / self.carrier_frequency_hz
    }

    /// `c / 2B`.
    pub fn range_resolution(&self) -> f64 {
        self.speed_of_light_m_s / (2.0 * self.bandwidth_hz)
    }

    /// `c / (2 f_c T)`.
    pub fn velocity_resolution(&self) -> f64 {
        self.speed_of_light_m_s / (2.0 * self.carrier_frequency_hz * self.frame_period_s)
    }

    pub fn max_unambiguous_velocity(&self) -> f64 {
        (self.chirps_per_frame / 2) as f64 * self.velocity_resolution()
    }

    /// `c / (f_c N_Rx h cos α)`.
    pub fn angle_resolution(&self, azimuth_rad: f64) -> Result<f64, RadarError> {
        let cos = azimuth_rad.cos();
        if azimuth_rad.abs() >= FRAC_PI_2 || cos <= 0.0 {
            return Err(RadarError::AngleOutOfRange { azimuth_rad });
        }
        Ok(self.speed_of_light_m_s
            / (self.carrier_frequency_hz * self.num_rx_virtual as f64 * self.antenna_spacing_m * cos))
    }

    pub fn range_coverage_m(&self) -> f64 {
        self.samples_per_chirp as f64 * self.range_resolution()
    }

    pub fn sample_interval_s(&self) -> f64 {
        self.sweep_period_s / self.samples_per_chirp as f64
    }

    pub fn chirp_interval_s(&self) -> f64 {
        self.frame_period_s / self.chirps_per_frame as f64
    }

    /// Column of zero velocity in the range-Doppler map.
    pub fn doppler_center(&self) -> usize {
        self.chirps_per_frame / 2
    }

    /// Column of boresight in the range-angle map.
    pub fn angle_center(&self) -> usize {
        self.num_angle_bins / 2
    }

    /// Angle-FFT bins per unit of `sin α`.
    pub fn angle_bins_per_sine(&self) -> f64 {
        self.num_angle_bins as f64 * self.angle_phase_factor * self.antenna_spacing_m * self.carrier_frequency_hz
            / self.speed_of_light_m_s
    }

    /// Signed radial velocity of a Doppler column (positive = approaching).
    pub fn doppler_bin_velocity(&self, bin: usize) -> f64 {
        (bin as f64 - self.doppler_center() as f64) * self.velocity_resolution()
    }

    /// Center range of a range bin.
    pub fn range_bin_center(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) * self.range_resolution()
    }

    /// Azimuth of an angle column, with `sin α` clamped to [-1, 1].
    pub fn angle_bin_azimuth(&self, bin: usize) -> f64 {
        let s = (bin as f64 - self.angle_center() as f64) / self.angle_bins_per_sine();
        s.clamp(-1.0, 1.0).asin()
    }

    /// Nearest angle column for an azimuth (may fall outside the map).
    pub fn azimuth_to_angle_bin(&self, azimuth_rad: f64) -> i64 {
        self.angle_center() as i64 + (azimuth_rad.sin() * self.angle_bins_per_sine()).round() as i64
    }

    /// Range bin containing `range_m` (floor quantization).
    pub fn range_to_bin(&self, range_m: f64) -> i64 {
        (range_m / self.range_resolution() + 1e-9).floor() as i64
    }

    /// Doppler column for a radial velocity (may fall outside the map).
    pub fn velocity_to_doppler_bin(&self, velocity_m_s: f64) -> i64 {
        self.doppler_center() as i64 + (velocity_m_s / self.velocity_resolution()).round() as i64
    }
}
