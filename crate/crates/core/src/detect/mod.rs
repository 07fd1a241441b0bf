//! CFAR detection on radar maps and conversion of range-angle detections into
//! the Cartesian DoA-Doppler point cloud.

mod cfar;
mod doa;

pub use cfar::{cfar_detect, cfar_scale, CfarParams, Detection};
pub use doa::{to_doa_cloud, DoaCloud, DoaPoint};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("invalid CFAR parameters: {0}")]
    InvalidParams(String),
    #[error("CFAR window of {window} cells does not fit a {rows}x{cols} map")]
    WindowTooLarge { window: usize, rows: usize, cols: usize },
    #[error("detection bin ({row}, {col}) outside a {rows}x{cols} map")]
    BinOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("map dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
}
