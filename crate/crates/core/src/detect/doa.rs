use serde::{Deserialize, Serialize};

use super::{DetectError, Detection};
use crate::map::RealMap;
use crate::radar::RadarConfig;

/// One DoA-Doppler point: ground-plane position and signed radial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaPoint {
    pub x: f64,
    pub y: f64,
    pub doppler: f64,
}

impl DoaPoint {
    pub fn new(x: f64, y: f64, doppler: f64) -> Self {
        Self { x, y, doppler }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.doppler]
    }

    pub fn range(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Azimuth measured from +y toward +x.
    pub fn azimuth(&self) -> f64 {
        self.x.atan2(self.y)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DoaCloud {
    pub frame_index: usize,
    pub points: Vec<DoaPoint>,
    /// `(range_bin, angle_bin)` each point was detected at.
    pub source_bins: Vec<(usize, usize)>,
}

impl DoaCloud {
    pub fn empty(frame_index: usize) -> Self {
        Self {
            frame_index,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<[f64; 3]> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.points.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for (acc, v) in c.iter_mut().zip(p.to_array()) {
                *acc += v / n;
            }
        }
        Some(c)
    }
}

/// Converts range-angle detections to Cartesian points and attaches the
/// velocity of the strongest range-Doppler cell in the same range row.
///
/// Bin `ρ` maps to range `(ρ + 0.5) δd`; detections beyond `max_range_m` are dropped.
pub fn to_doa_cloud(
    detections: &[Detection],
    rd_map: &RealMap,
    config: &RadarConfig,
    frame_index: usize,
) -> Result<DoaCloud, DetectError> {
    let rd_dims = (config.samples_per_chirp, config.chirps_per_frame);
    if rd_map.dims() != rd_dims {
        return Err(DetectError::DimensionMismatch {
            expected: rd_dims,
            got: rd_map.dims(),
        });
    }
    let (rows, cols) = (config.samples_per_chirp, config.num_angle_bins);
    let mut cloud = DoaCloud::empty(frame_index);
    for d in detections {
        if d.row >= rows || d.col >= cols {
            return Err(DetectError::BinOutOfRange {
                row: d.row,
                col: d.col,
                rows,
                cols,
            });
        }
        let range = config.range_bin_center(d.row);
        if range > config.max_range_m {
            continue;
        }
        let azimuth = config.angle_bin_azimuth(d.col);
        let doppler_bin = strongest(rd_map.row(d.row));
        cloud.points.push(DoaPoint {
            x: range * azimuth.sin(),
            y: range * azimuth.cos(),
            doppler: config.doppler_bin_velocity(doppler_bin),
        });
        cloud.source_bins.push((d.row, d.col));
    }
    Ok(cloud)
}

fn strongest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
