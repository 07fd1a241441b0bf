//! Semi-automatic annotation of FMCW radar frames.
//!
//! The crate is organised as a pipeline:
//!
//! ```text
//! Scene ─ synthesize ─ RadarCube ─ 3D-FFT ─ RD / RA maps
//!                                              │
//!                                       CA-CFAR on RA
//!                                              │
//!                               DoA-Doppler point cloud (x, y, v)
//!                                              │
//!        camera feature point ── Mean-Shift + bandwidth selection
//!                                              │
//!                                   centroid tracking over time
//!                                              │
//!                       sparse points / boxes / dense masks (RD, RA)
//! ```
//!
//! Each stage lives in its own module and is usable on its own; [`pipeline`]
//! composes them over a [`io::SequenceStore`] on disk.

pub mod annotate;
pub mod clustering;
pub mod detect;
pub mod error;
pub mod io;
pub mod map;
pub mod mask;
pub mod metrics;
pub mod pipeline;
pub mod radar;
pub mod seed;
pub mod vision;

pub use annotate::{Annotation, Track, TrackStatus};
pub use clustering::{BandwidthGrid, Cluster, Gaussian};
pub use detect::{CfarParams, Detection, DoaCloud, DoaPoint};
pub use error::{Error, Result};
pub use map::RealMap;
pub use mask::{BinaryMask, Rle};
pub use metrics::{Confusion, LabelMap, MetricReport};
pub use radar::{
    Category, PointTarget, RadarConfig, RadarCube, RadarFrame, Scene, SceneObject,
};
pub use vision::{CameraModel, FeaturePoint, InstanceDetection};
