//! Mean-Shift clustering of DoA-Doppler clouds with automatic bandwidth
//! selection by Jensen-Shannon stability.
//!
//! All routines here work on points in *normalized* coordinates: each cloud
//! axis divided by its [`CloudScales`] entry so one spherical bandwidth is
//! meaningful across meters and meters per second.

mod bandwidth;
mod gaussian;
mod mean_shift;

pub use bandwidth::{select_bandwidth, BandwidthGrid, BandwidthSelection, SelectionParams};
pub use gaussian::{fit_gaussian, js_divergence, Gaussian, COVARIANCE_EPSILON};
pub use mean_shift::{kde, mean_shift, mean_shift_path, Cluster, MeanShiftParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::DoaPoint;

pub type Point3 = [f64; 3];

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("bandwidth must be finite and > 0, got {0}")]
    InvalidBandwidth(f64),
    #[error("invalid bandwidth grid: {0}")]
    InvalidGrid(String),
    #[error("bandwidth grid needs at least 3 values, got {0}")]
    GridTooSmall(usize),
    #[error("cannot fit a Gaussian to {0} point(s)")]
    DegenerateCluster(usize),
    #[error("covariance is not symmetric positive definite")]
    SingularCovariance,
    #[error("{0}")]
    InvalidArgument(String),
}

/// Everything the per-frame association needs: candidate bandwidths, axis
/// scales and the Monte-Carlo / Mean-Shift settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub bandwidth_grid: BandwidthGrid,
    pub scales: CloudScales,
    pub mc_samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let ms = MeanShiftParams::default();
        Self {
            bandwidth_grid: BandwidthGrid::default(),
            scales: CloudScales::default(),
            mc_samples: 4096,
            seed: 0,
            tol: ms.tol,
            max_iter: ms.max_iter,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<(), ClusteringError> {
        self.scales.validate()?;
        if self.bandwidth_grid.len() < 3 {
            return Err(ClusteringError::GridTooSmall(self.bandwidth_grid.len()));
        }
        if self.mc_samples == 0 {
            return Err(ClusteringError::InvalidArgument("mc_samples must be >= 1".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(ClusteringError::InvalidArgument("tol must be > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }

    pub fn selection_params(&self) -> SelectionParams {
        SelectionParams {
            mc_samples: self.mc_samples,
            rng_seed: self.seed,
            mean_shift: MeanShiftParams {
                tol: self.tol,
                max_iter: self.max_iter,
            },
        }
    }
}

/// Per-axis divisors applied before clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudScales {
    pub x: f64,
    pub y: f64,
    pub doppler: f64,
}

impl Default for CloudScales {
    fn default() -> Self {
        Self {
            x: 1.0,
            y: 1.0,
            doppler: 1.0,
        }
    }
}

impl CloudScales {
    pub fn validate(&self) -> Result<(), ClusteringError> {
        for v in [self.x, self.y, self.doppler] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ClusteringError::InvalidArgument(format!("cloud scale must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn normalize(&self, p: [f64; 3]) -> Point3 {
        [p[0] / self.x, p[1] / self.y, p[2] / self.doppler]
    }

    pub fn denormalize(&self, p: Point3) -> [f64; 3] {
        [p[0] * self.x, p[1] * self.y, p[2] * self.doppler]
    }

    pub fn normalize_cloud(&self, points: &[DoaPoint]) -> Vec<Point3> {
        points.iter().map(|p| self.normalize(p.to_array())).collect()
    }
}

pub fn dist_sq(a: &Point3, b: &Point3) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}
