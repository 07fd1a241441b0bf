//! Crate-level error type.
//!
//! Every module has its own error enum; this one wraps them so the pipeline
//! can attach frame / instance context while propagating.

use std::path::PathBuf;

use thiserror::Error;

use crate::{annotate, clustering, detect, io, metrics, radar, vision};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Radar(#[from] radar::RadarError),
    #[error(transparent)]
    Detect(#[from] detect::DetectError),
    #[error(transparent)]
    Clustering(#[from] clustering::ClusteringError),
    #[error(transparent)]
    Vision(#[from] vision::VisionError),
    #[error(transparent)]
    Annotate(#[from] annotate::AnnotateError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("instance {instance}: {source}")]
    AtInstance {
        instance: u32,
        #[source]
        source: Box<Error>,
    },
    #[error("missing input {}: {what}", path.display())]
    MissingInput { path: PathBuf, what: String },
}

impl Error {
    pub fn at_frame(self, frame: usize) -> Self {
        Error::AtFrame {
            frame,
            source: Box::new(self),
        }
    }

    pub fn at_instance(self, instance: u32) -> Self {
        Error::AtInstance {
            instance,
            source: Box::new(self),
        }
    }
}
