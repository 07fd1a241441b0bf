use serde::{Deserialize, Serialize};

use super::DetectError;
use crate::map::RealMap;

/// 2D cell-averaging CFAR window; cell counts are per side, per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarParams {
    pub train_cells: usize,
    pub guard_cells: usize,
    pub probability_false_alarm: f64,
}

impl Default for CfarParams {
    fn default() -> Self {
        Self {
            train_cells: 8,
            guard_cells: 2,
            probability_false_alarm: 1e-3,
        }
    }
}

impl CfarParams {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.train_cells < 1 {
            return Err(DetectError::InvalidParams("train_cells must be >= 1".into()));
        }
        let p = self.probability_false_alarm;
        if !(p > 0.0 && p < 1.0) {
            return Err(DetectError::InvalidParams(format!(
                "probability_false_alarm must lie in (0, 1), got {p}"
            )));
        }
        Ok(())
    }

    /// Full window side length.
    pub fn window(&self) -> usize {
        2 * (self.train_cells + self.guard_cells) + 1
    }
}

/// A detected map cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Threshold multiplier for `n` training cells: `n (P_fa^(-1/n) - 1)`.
pub fn cfar_scale(n_train: usize, pfa: f64) -> f64 {
    let n = n_train as f64;
    n * (pfa.powf(-1.0 / n) - 1.0)
}

/// Summed-area table with a zero border: `s[(r, c)]` = sum over `[0, r) x [0, c)`.
struct Integral {
    cols: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(map: &RealMap) -> Self {
        let (rows, cols) = map.dims();
        let w = cols + 1;
        let mut sums = vec![0.0; (rows + 1) * w];
        for r in 0..rows {
            let mut acc = 0.0;
            for c in 0..cols {
                acc += map.get(r, c);
                sums[(r + 1) * w + c + 1] = sums[r * w + c + 1] + acc;
            }
        }
        Self { cols: w, sums }
    }

    /// Sum over rows `[r0, r1)` and cols `[c0, c1)`.
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        let s = |r: usize, c: usize| self.sums[r * self.cols + c];
        s(r1, c1) - s(r0, c1) - s(r1, c0) + s(r0, c0)
    }
}

/// Cell-averaging CFAR over a 2D map.
///
/// A cell is detected when its value exceeds `α` times the mean of its
/// training cells, `α` being [`cfar_scale`] of the number of training cells
/// actually available; windows are truncated at the map borders.
pub fn cfar_detect(map: &RealMap, params: &CfarParams) -> Result<Vec<Detection>, DetectError> {
    params.validate()?;
    let (rows, cols) = map.dims();
    let window = params.window();
    if rows < window || cols < window {
        return Err(DetectError::WindowTooLarge { window, rows, cols });
    }
    let integral = Integral::new(map);
    let outer = params.train_cells + params.guard_cells;
    let guard = params.guard_cells;
    let span = |center: usize, half: usize, len: usize| (center.saturating_sub(half), (center + half + 1).min(len));

    let mut detections = Vec::new();
    for r in 0..rows {
        let (or0, or1) = span(r, outer, rows);
        let (gr0, gr1) = span(r, guard, rows);
        for c in 0..cols {
            let (oc0, oc1) = span(c, outer, cols);
            let (gc0, gc1) = span(c, guard, cols);
            let n_train = (or1 - or0) * (oc1 - oc0) - (gr1 - gr0) * (gc1 - gc0);
            if n_train == 0 {
                continue;
            }
            let train_sum = integral.rect(or0, or1, oc0, oc1) - integral.rect(gr0, gr1, gc0, gc1);
            let mean = train_sum / n_train as f64;
            let value = map.get(r, c);
            if value > cfar_scale(n_train, params.probability_false_alarm) * mean {
                detections.push(Detection { row: r, col: c, value });
            }
        }
    }
    Ok(detections)
}
