//! Binary raster masks and their row-major run-length encoding.
//!
//! The RLE layout is `{"size": [rows, cols], "counts": [...]}` where `counts`
//! alternates runs of unset and set cells, scanning row-major, always starting
//! with an (possibly empty) unset run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("RLE counts sum to {got}, expected {expected} cells")]
    RleLength { got: u64, expected: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    /// Mask with the given `(row, col)` cells set; out-of-bounds cells are ignored.
    pub fn from_cells(rows: usize, cols: usize, cells: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(rows, cols);
        for (r, c) in cells {
            if r < rows && c < cols {
                m.set(r, c, true);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.cols + col] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Set cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / self.cols, i % self.cols))
    }

    /// True if every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.cells().all(|(r, c)| other.get(r, c))
    }

    pub fn to_rle(&self) -> Rle {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &b in &self.data {
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
        counts.push(run);
        Rle {
            size: [self.rows, self.cols],
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    pub size: [usize; 2],
    pub counts: Vec<u32>,
}

impl Rle {
    pub fn decode(&self) -> Result<BinaryMask, MaskError> {
        let [rows, cols] = self.size;
        let expected = (rows * cols) as u64;
        let got: u64 = self.counts.iter().map(|&c| u64::from(c)).sum();
        if got != expected {
            return Err(MaskError::RleLength { got, expected });
        }
        let mut data = Vec::with_capacity(rows * cols);
        let mut value = false;
        for &run in &self.counts {
            data.extend(std::iter::repeat_n(value, run as usize));
            value = !value;
        }
        Ok(BinaryMask { rows, cols, data })
    }
}
