//! Seeded cluster association, centroid tracking through a sequence, and
//! emission of sparse / box / dense-mask annotations in both radar views.

mod project;
mod track;

pub use project::{
    annotate_points, bounding_box, dense_mask, project_ra, project_rd, rasterize_labels, Annotation, BBox,
    Projection, View, ViewAnnotation,
};
pub use track::{associate_cluster, track_sequence, Association, Track, TrackFrame, TrackStatus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusteringError;

#[derive(Debug, Error, PartialEq)]
pub enum AnnotateError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("nearest cluster is {distance:.3} from the seed (threshold {threshold})")]
    AssociationTooFar { distance: f64, threshold: f64 },
    #[error("seed association failed at frame {frame}: {reason}")]
    SeedAssociationFailed { frame: usize, reason: String },
    #[error("seed frame {seed} outside a sequence of {len} frames")]
    SeedOutOfSequence { seed: usize, len: usize },
    #[error("point set is empty")]
    EmptySet,
    #[error(transparent)]
    Clustering(ClusteringError),
}

impl From<ClusteringError> for AnnotateError {
    fn from(e: ClusteringError) -> Self {
        match e {
            ClusteringError::EmptyCloud => AnnotateError::EmptyCloud,
            other => AnnotateError::Clustering(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotatorParams {
    /// Disk radius, in bins, for the range-Doppler dense mask.
    pub dilation_radius_rd: f64,
    /// Disk radius, in bins, for the range-angle dense mask.
    pub dilation_radius_ra: f64,
    /// Consecutive lost frames after which tracking stops in that direction.
    pub max_lost: usize,
    /// Largest accepted centroid-to-seed distance, normalized units.
    pub assoc_threshold: f64,
}

impl Default for AnnotatorParams {
    fn default() -> Self {
        Self {
            dilation_radius_rd: 2.0,
            dilation_radius_ra: 2.0,
            max_lost: 5,
            assoc_threshold: 2.0,
        }
    }
}

impl AnnotatorParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dilation_radius_rd >= 0.0 && self.dilation_radius_ra >= 0.0) {
            return Err("dilation radii must be >= 0".into());
        }
        if self.max_lost == 0 {
            return Err("max_lost must be >= 1".into());
        }
        if !(self.assoc_threshold > 0.0) {
            return Err("assoc_threshold must be > 0".into());
        }
        Ok(())
    }
}
