use serde::{Deserialize, Serialize};

use super::{AnnotateError, AnnotatorParams};
use crate::clustering::{dist_sq, select_bandwidth, Cluster, ClusteringConfig};
use crate::detect::{DoaCloud, DoaPoint};
use crate::radar::Category;

/// Cluster attached to a seed point in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    /// Selected cluster, in normalized coordinates.
    pub cluster: Cluster,
    pub sigma: f64,
    /// Centroid-to-seed distance, normalized units.
    pub distance: f64,
    /// Cluster centroid in physical units `(x, y, v)`.
    pub centroid: [f64; 3],
    /// Member points in physical units.
    pub points: Vec<DoaPoint>,
}

/// Runs bandwidth selection around `seed` (physical `(x, y, v)`) and returns the
/// winning cluster, unless its centroid is farther than `assoc_threshold`.
pub fn associate_cluster(
    cloud: &DoaCloud,
    seed: [f64; 3],
    clustering: &ClusteringConfig,
    params: &AnnotatorParams,
) -> Result<Association, AnnotateError> {
    if cloud.is_empty() {
        return Err(AnnotateError::EmptyCloud);
    }
    let scales = &clustering.scales;
    let points = scales.normalize_cloud(&cloud.points);
    let seed_n = scales.normalize(seed);
    let sel = select_bandwidth(&points, &seed_n, &clustering.bandwidth_grid, &clustering.selection_params())?;
    let distance = dist_sq(&sel.cluster.centroid, &seed_n).sqrt();
    if distance > params.assoc_threshold {
        return Err(AnnotateError::AssociationTooFar {
            distance,
            threshold: params.assoc_threshold,
        });
    }
    Ok(Association {
        centroid: scales.denormalize(sel.cluster.centroid),
        points: sel.cluster.members.iter().map(|&i| cloud.points[i]).collect(),
        cluster: sel.cluster,
        sigma: sel.sigma,
        distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Seeded,
    Propagated,
    Lost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub frame_index: usize,
    pub status: TrackStatus,
    /// Seed used in this frame, physical units.
    pub seed: [f64; 3],
    pub association: Option<Association>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub instance_id: u32,
    pub category: Category,
    /// Ordered by frame index; contiguous.
    pub frames: Vec<TrackFrame>,
}

impl Track {
    pub fn annotated(&self) -> impl Iterator<Item = (&TrackFrame, &Association)> {
        self.frames.iter().filter_map(|f| f.association.as_ref().map(|a| (f, a)))
    }

    pub fn frame(&self, frame_index: usize) -> Option<&TrackFrame> {
        self.frames.iter().find(|f| f.frame_index == frame_index)
    }
}

fn propagate(
    clouds: &[DoaCloud],
    order: impl Iterator<Item = usize>,
    start_seed: [f64; 3],
    clustering: &ClusteringConfig,
    params: &AnnotatorParams,
) -> Result<Vec<TrackFrame>, AnnotateError> {
    let mut out = Vec::new();
    let mut seed = start_seed;
    let mut lost_run = 0;
    for t in order {
        match associate_cluster(&clouds[t], seed, clustering, params) {
            Ok(a) => {
                let next = a.centroid;
                out.push(TrackFrame {
                    frame_index: clouds[t].frame_index,
                    status: TrackStatus::Propagated,
                    seed,
                    association: Some(a),
                });
                seed = next;
                lost_run = 0;
            }
            Err(AnnotateError::EmptyCloud | AnnotateError::AssociationTooFar { .. }) => {
                out.push(TrackFrame {
                    frame_index: clouds[t].frame_index,
                    status: TrackStatus::Lost,
                    seed,
                    association: None,
                });
                lost_run += 1;
                if lost_run >= params.max_lost {
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Associates the seed at `seed_pos`, then walks forward and backward
/// through `clouds`, each frame seeded with the previous centroid.
///
/// Lost frames keep the last good centroid as seed; `max_lost` consecutive
/// losses end the walk in that direction.
pub fn track_sequence(
    clouds: &[DoaCloud],
    seed_pos: usize,
    seed_point: [f64; 3],
    instance_id: u32,
    category: Category,
    clustering: &ClusteringConfig,
    params: &AnnotatorParams,
) -> Result<Track, AnnotateError> {
    if seed_pos >= clouds.len() {
        return Err(AnnotateError::SeedOutOfSequence {
            seed: seed_pos,
            len: clouds.len(),
        });
    }
    let seeded = associate_cluster(&clouds[seed_pos], seed_point, clustering, params).map_err(|e| match e {
        AnnotateError::EmptyCloud | AnnotateError::AssociationTooFar { .. } => AnnotateError::SeedAssociationFailed {
            frame: clouds[seed_pos].frame_index,
            reason: e.to_string(),
        },
        other => other,
    })?;
    let centroid = seeded.centroid;

    let mut backward = propagate(clouds, (0..seed_pos).rev(), centroid, clustering, params)?;
    let forward = propagate(clouds, seed_pos + 1..clouds.len(), centroid, clustering, params)?;
    backward.reverse();

    let mut frames = backward;
    frames.push(TrackFrame {
        frame_index: clouds[seed_pos].frame_index,
        status: TrackStatus::Seeded,
        seed: seed_point,
        association: Some(seeded),
    });
    frames.extend(forward);
    Ok(Track {
        instance_id,
        category,
        frames,
    })
}
