use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{RadarConfig, RadarCube, RadarError, RadarFrame};
use crate::map::RealMap;

/// Symmetric Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Runs the 3D-FFT over a frame's raw cube and fills `rd_map` and `ra_map`.
///
/// * range-Doppler: range FFT then Doppler FFT, magnitudes averaged over
///   antennas, Doppler axis shifted so zero velocity sits at column `M/2`.
/// * range-angle: range FFT then a zero-padded angle FFT across antennas,
///   magnitudes averaged over chirps, boresight at column `A/2`.
pub fn process_cube(frame: &RadarFrame, config: &RadarConfig) -> Result<RadarFrame, RadarError> {
    config.validate()?;
    let cube = frame.raw_cube.as_ref().ok_or(RadarError::MissingCube(frame.frame_index))?;
    let expected = (config.num_rx_virtual, config.chirps_per_frame, config.samples_per_chirp);
    if cube.dims() != expected {
        return Err(RadarError::DimensionMismatch {
            expected,
            got: cube.dims(),
        });
    }
    let (rd, ra) = process_raw(cube, config);
    Ok(RadarFrame {
        rd_map: Some(rd),
        ra_map: Some(ra),
        ..frame.clone()
    })
}

fn process_raw(cube: &RadarCube, config: &RadarConfig) -> (RealMap, RealMap) {
    let (na, nm, nn) = cube.dims();
    let nangle = config.num_angle_bins;
    let mut planner = FftPlanner::<f64>::new();
    let range_fft = planner.plan_fft_forward(nn);
    let doppler_fft = planner.plan_fft_forward(nm);
    let angle_fft = planner.plan_fft_forward(nangle);

    let (range_win, doppler_win) = if config.apply_window {
        (hann_window(nn), hann_window(nm))
    } else {
        (vec![1.0; nn], vec![1.0; nm])
    };

    // range FFT on every chirp, in place; layout stays [antenna][chirp][range bin]
    let mut spectrum: Vec<Complex64> = cube
        .data()
        .chunks_exact(nn)
        .flat_map(|chirp| chirp.iter().zip(&range_win).map(|(s, w)| s * w))
        .collect();
    range_fft.process(&mut spectrum);
    let at = |k: usize, m: usize, rho: usize| spectrum[(k * nm + m) * nn + rho];

    let mut rd = RealMap::zeros(nn, nm);
    let mut column = vec![Complex64::new(0.0, 0.0); nm];
    for k in 0..na {
        for rho in 0..nn {
            for (m, slot) in column.iter_mut().enumerate() {
                *slot = at(k, m, rho) * doppler_win[m];
            }
            doppler_fft.process(&mut column);
            for (bin, z) in column.iter().enumerate() {
                let col = (bin + nm / 2) % nm;
                rd.set(rho, col, rd.get(rho, col) + z.norm() / na as f64);
            }
        }
    }

    let mut ra = RealMap::zeros(nn, nangle);
    let mut padded = vec![Complex64::new(0.0, 0.0); nangle];
    for m in 0..nm {
        for rho in 0..nn {
            padded.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (k, slot) in padded.iter_mut().take(na).enumerate() {
                *slot = at(k, m, rho);
            }
            angle_fft.process(&mut padded);
            for (bin, z) in padded.iter().enumerate() {
                let col = (bin + nangle / 2) % nangle;
                ra.set(rho, col, ra.get(rho, col) + z.norm() / nm as f64);
            }
        }
    }
    (rd, ra)
}
