use std::f64::consts::{FRAC_PI_2, PI};

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{RadarConfig, RadarCube, RadarError, RadarFrame, Scene};
use crate::seed::rng_from_seed;

/// An ideal point scatterer as seen by the radar in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub range_m: f64,
    pub azimuth_rad: f64,
    /// Positive when approaching.
    pub radial_velocity_m_s: f64,
    pub amplitude: f64,
}

fn phasors(count: usize, cycles_per_step: f64) -> Vec<Complex64> {
    (0..count)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * cycles_per_step * i as f64))
        .collect()
}

/// Builds the IF cube for a set of point targets.
///
/// Sample `[k, m, n]` receives `a * exp(j 2π (f_r n Δt + f_d m T_c + φ_k))` per
/// target with beat frequency `f_r = 2 B r / (c T_s)`, Doppler `f_d = 2 f_c v / c`
/// and inter-antenna phase `φ_k = k f_c κ h sin α / c`, plus circular complex
/// Gaussian noise of standard deviation `noise_sigma`.
pub fn synthesize_targets(
    targets: &[PointTarget],
    config: &RadarConfig,
    noise_sigma: f64,
    rng_seed: u64,
) -> Result<RadarCube, RadarError> {
    config.validate()?;
    let (na, nm, nn) = (config.num_rx_virtual, config.chirps_per_frame, config.samples_per_chirp);
    let mut cube = RadarCube::zeros(na, nm, nn);
    let c = config.speed_of_light_m_s;
    let vmax = config.max_unambiguous_velocity();

    for t in targets {
        if !(t.range_m > 0.0 && t.range_m <= config.max_range_m && t.azimuth_rad.abs() < FRAC_PI_2) {
            return Err(RadarError::TargetOutOfRange {
                range_m: t.range_m,
                azimuth_rad: t.azimuth_rad,
                max_range_m: config.max_range_m,
            });
        }
        if t.radial_velocity_m_s.abs() > vmax {
            warn!(
                "radial velocity {:.2} m/s exceeds the unambiguous limit {vmax:.2} m/s; it will alias",
                t.radial_velocity_m_s
            );
        }
        let beat_hz = 2.0 * config.bandwidth_hz * t.range_m / (c * config.sweep_period_s);
        let doppler_hz = 2.0 * config.carrier_frequency_hz * t.radial_velocity_m_s / c;
        let antenna_cycles =
            config.carrier_frequency_hz * config.angle_phase_factor * config.antenna_spacing_m * t.azimuth_rad.sin() / c;

        let range_ph = phasors(nn, beat_hz * config.sample_interval_s());
        let doppler_ph = phasors(nm, doppler_hz * config.chirp_interval_s());
        let antenna_ph = phasors(na, antenna_cycles);

        let data = cube.data_mut();
        for (k, &pa) in antenna_ph.iter().enumerate() {
            for (m, &pm) in doppler_ph.iter().enumerate() {
                let outer = pa * pm * t.amplitude;
                let row = &mut data[(k * nm + m) * nn..(k * nm + m + 1) * nn];
                for (s, &pn) in row.iter_mut().zip(&range_ph) {
                    *s += outer * pn;
                }
            }
        }
    }

    if noise_sigma > 0.0 {
        let mut rng = rng_from_seed(rng_seed);
        let scale = noise_sigma / std::f64::consts::SQRT_2;
        for s in cube.data_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(re * scale, im * scale);
        }
    }
    Ok(cube)
}

/// Synthesizes the raw cube of one scene frame.
pub fn synthesize_frame(
    scene: &Scene,
    frame_index: usize,
    config: &RadarConfig,
    noise_sigma: f64,
    rng_seed: u64,
) -> Result<RadarFrame, RadarError> {
    if frame_index >= scene.num_frames() {
        return Err(RadarError::InvalidScene(format!(
            "frame {frame_index} outside sequence of {} frames",
            scene.num_frames()
        )));
    }
    let cube = synthesize_targets(&scene.targets_at(frame_index), config, noise_sigma, rng_seed)?;
    Ok(RadarFrame {
        frame_index,
        timestamp_s: scene.timestamp(frame_index),
        raw_cube: Some(cube),
        rd_map: None,
        ra_map: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::{Category, SceneObject};

    fn target(range_m: f64, v: f64) -> PointTarget {
        PointTarget {
            range_m,
            azimuth_rad: 0.0,
            radial_velocity_m_s: v,
            amplitude: 1.0,
        }
    }

    #[test]
    fn empty_scene_noiseless_is_zero() {
        let cube = synthesize_targets(&[], &RadarConfig::default(), 0.0, 1).unwrap();
        assert!(cube.is_zero());
        assert_eq!(cube.dims(), (8, 64, 256));
    }

    #[test]
    fn static_target_chirps_identical() {
        let c = RadarConfig::default();
        let cube = synthesize_targets(&[target(12.3, 0.0)], &c, 0.0, 1).unwrap();
        for k in 0..c.num_rx_virtual {
            let first = cube.chirp(k, 0).to_vec();
            for m in 1..c.chirps_per_frame {
                assert_eq!(cube.chirp(k, m), first.as_slice());
            }
        }
    }

    #[test]
    fn out_of_range_target_rejected() {
        let c = RadarConfig::default();
        assert!(matches!(
            synthesize_targets(&[target(60.0, 0.0)], &c, 0.0, 1),
            Err(RadarError::TargetOutOfRange { .. })
        ));
        let behind = PointTarget {
            azimuth_rad: 2.0,
            ..target(10.0, 0.0)
        };
        assert!(synthesize_targets(&[behind], &c, 0.0, 1).is_err());
    }

    #[test]
    fn fast_target_aliases_without_error() {
        let c = RadarConfig::default();
        assert!(synthesize_targets(&[target(10.0, 20.0)], &c, 0.0, 1).is_ok());
    }

    #[test]
    fn noise_is_seeded() {
        let c = RadarConfig::default();
        let a = synthesize_targets(&[], &c, 0.5, 9).unwrap();
        let b = synthesize_targets(&[], &c, 0.5, 9).unwrap();
        let d = synthesize_targets(&[], &c, 0.5, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        let power: f64 = a.data().iter().map(|z| z.norm_sqr()).sum::<f64>() / a.data().len() as f64;
        assert!((power - 0.25).abs() < 0.01, "noise power {power}");
    }

    #[test]
    fn frame_from_scene() {
        let scene = Scene {
            objects: vec![SceneObject {
                instance_id: 1,
                category: Category::Pedestrian,
                trajectory: vec![[0.0, 5.0], [0.0, 5.1]],
                reflectivity_amplitude: 1.0,
            }],
            ..Scene::default()
        };
        let f = synthesize_frame(&scene, 1, &RadarConfig::default(), 0.0, 0).unwrap();
        assert_eq!(f.frame_index, 1);
        assert!((f.timestamp_s - 0.1).abs() < 1e-12);
        assert!(!f.raw_cube.unwrap().is_zero());
        assert!(synthesize_frame(&scene, 2, &RadarConfig::default(), 0.0, 0).is_err());
    }
}
