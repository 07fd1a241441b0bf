//! Segmentation metrics: per-class IoU, pixel precision and pixel recall with
//! arithmetic and harmonic aggregation, on dense label maps or sparse points.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_CLASSES: usize = 4;
pub const CLASS_NAMES: [&str; NUM_CLASSES] = ["background", "pedestrian", "cyclist", "car"];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("label map dimensions differ: {pred:?} vs {truth:?}")]
    DimensionMismatch { pred: (usize, usize), truth: (usize, usize) },
    #[error("label {0} outside the 4-class set")]
    InvalidLabel(u8),
    #[error("sparse point ({row}, {col}) outside a {rows}x{cols} map")]
    PointOutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
}

/// Per-bin class labels over one radar view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    rows: usize,
    cols: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(rows: usize, cols: usize, labels: Vec<u8>) -> Result<Self, MetricsError> {
        if labels.len() != rows * cols {
            return Err(MetricsError::DimensionMismatch {
                pred: (rows, cols),
                truth: (labels.len(), 1),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(MetricsError::InvalidLabel(bad));
        }
        Ok(Self { rows, cols, labels })
    }

    pub fn background(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            labels: vec![0; rows * cols],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, label: u8) -> Result<(), MetricsError> {
        if label as usize >= NUM_CLASSES {
            return Err(MetricsError::InvalidLabel(label));
        }
        self.labels[row * self.cols + col] = label;
        Ok(())
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// `counts[truth][pred]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn add(&mut self, other: &Confusion) {
        for i in 0..NUM_CLASSES {
            for j in 0..NUM_CLASSES {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }

    fn tally(&mut self, truth: u8, pred: u8) {
        self.counts[truth as usize][pred as usize] += 1;
    }
}

pub fn confusion(pred: &LabelMap, truth: &LabelMap) -> Result<Confusion, MetricsError> {
    if pred.dims() != truth.dims() {
        return Err(MetricsError::DimensionMismatch {
            pred: pred.dims(),
            truth: truth.dims(),
        });
    }
    let mut c = Confusion::default();
    for (&t, &p) in truth.labels.iter().zip(&pred.labels) {
        c.tally(t, p);
    }
    Ok(c)
}

/// Per-class ratios; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub iou: Option<f64>,
    pub pp: Option<f64>,
    pub pr: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn per_class_metrics(c: &Confusion) -> [ClassMetrics; NUM_CLASSES] {
    std::array::from_fn(|k| {
        let tp = c.counts[k][k];
        let fn_: u64 = (0..NUM_CLASSES).filter(|&j| j != k).map(|j| c.counts[k][j]).sum();
        let fp: u64 = (0..NUM_CLASSES).filter(|&i| i != k).map(|i| c.counts[i][k]).sum();
        ClassMetrics {
            iou: ratio(tp, tp + fp + fn_),
            pp: ratio(tp, tp + fp),
            pr: ratio(tp, tp + fn_),
        }
    })
}

pub fn arithmetic_mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Harmonic mean; zero as soon as any value is zero.
pub fn harmonic_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    if values.iter().any(|&v| v == 0.0) {
        return Some(0.0);
    }
    Some(values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>())
}

/// Arithmetic and harmonic mean of one metric over the classes where it is defined.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub arithmetic: Option<f64>,
    pub harmonic: Option<f64>,
    /// Class indices that entered the means.
    pub classes: Vec<usize>,
}

fn aggregate(values: impl Iterator<Item = (usize, Option<f64>)>) -> Aggregate {
    let (classes, vals): (Vec<usize>, Vec<f64>) = values.filter_map(|(k, v)| v.map(|v| (k, v))).unzip();
    Aggregate {
        arithmetic: arithmetic_mean(&vals),
        harmonic: harmonic_mean(&vals),
        classes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_class: Vec<ClassMetrics>,
    pub iou: Aggregate,
    pub pp: Aggregate,
    pub pr: Aggregate,
}

impl MetricReport {
    /// Aggregates over `classes` (indices into the 4-class set).
    pub fn from_confusion(c: &Confusion, classes: &[usize]) -> Self {
        let per = per_class_metrics(c);
        let pick = |f: fn(&ClassMetrics) -> Option<f64>| aggregate(classes.iter().map(|&k| (k, f(&per[k]))));
        Self {
            iou: pick(|m| m.iou),
            pp: pick(|m| m.pp),
            pr: pick(|m| m.pr),
            per_class: per.to_vec(),
        }
    }

    /// Dense evaluation over all four classes.
    pub fn dense(c: &Confusion) -> Self {
        Self::from_confusion(c, &[0, 1, 2, 3])
    }

    /// Text table in percent: one column per class and metric, then the means.
    pub fn to_table(&self, title: &str) -> String {
        let pct = |v: Option<f64>| v.map_or("---".to_string(), |v| format!("{:.1}", 100.0 * v));
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let mut header = format!("{:<7}", "metric");
        for name in CLASS_NAMES {
            let _ = write!(header, " {name:>10}");
        }
        let _ = write!(header, " {:>8} {:>8}", "mean(m)", "mean(h)");
        let _ = writeln!(out, "{header}");
        let rows: [(&str, fn(&ClassMetrics) -> Option<f64>, &Aggregate); 3] = [
            ("IoU", |m| m.iou, &self.iou),
            ("PP", |m| m.pp, &self.pp),
            ("PR", |m| m.pr, &self.pr),
        ];
        for (name, get, agg) in rows {
            let mut line = format!("{name:<7}");
            for m in &self.per_class {
                let _ = write!(line, " {:>10}", pct(get(m)));
            }
            let _ = write!(line, " {:>8} {:>8}", pct(agg.arithmetic), pct(agg.harmonic));
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// A labelled sparse annotation point `(row, col, class)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsePoint {
    pub row: usize,
    pub col: usize,
    pub label: u8,
}

/// PP / PR restricted to the sparse points' bins; background is excluded from
/// the aggregation.
pub fn sparse_confusion(pred: &LabelMap, truth: &[SparsePoint]) -> Result<Confusion, MetricsError> {
    let (rows, cols) = pred.dims();
    let mut c = Confusion::default();
    for p in truth {
        if p.row >= rows || p.col >= cols {
            return Err(MetricsError::PointOutOfBounds {
                row: p.row,
                col: p.col,
                rows,
                cols,
            });
        }
        if p.label as usize >= NUM_CLASSES {
            return Err(MetricsError::InvalidLabel(p.label));
        }
        c.tally(p.label, pred.get(p.row, p.col));
    }
    Ok(c)
}

pub fn sparse_eval(pred: &LabelMap, truth: &[SparsePoint]) -> Result<MetricReport, MetricsError> {
    Ok(MetricReport::sparse(&sparse_confusion(pred, truth)?))
}

impl MetricReport {
    /// Report over foreground classes of a sparse confusion.
    pub fn sparse(c: &Confusion) -> Self {
        let mut report = MetricReport::from_confusion(c, &[1, 2, 3]);
        // IoU is not meaningful on sparse points
        report.iou = Aggregate::default();
        for m in &mut report.per_class {
            m.iou = None;
        }
        report.per_class[0] = ClassMetrics::default();
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_map(seed: u64, rows: usize, cols: usize) -> LabelMap {
        let mut rng = rng_from_seed(seed);
        LabelMap::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(0..4u8)).collect()).unwrap()
    }

    #[test]
    fn identical_maps_are_diagonal() {
        let m = random_map(1, 6, 7);
        let c = confusion(&m, &m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(c.counts[i][j], 0);
                }
            }
        }
        for k in per_class_metrics(&c) {
            for v in [k.iou, k.pp, k.pr].into_iter().flatten() {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn background_vs_car_single_cell() {
        let truth = LabelMap::background(3, 3);
        let pred = LabelMap::new(3, 3, vec![3; 9]).unwrap();
        let c = confusion(&pred, &truth).unwrap();
        assert_eq!(c.counts[0][3], 9);
        assert_eq!(c.total(), 9);
    }

    #[test]
    fn random_matches_scan() {
        let (p, t) = (random_map(2, 8, 8), random_map(3, 8, 8));
        let c = confusion(&p, &t).unwrap();
        let mut oracle = [[0u64; 4]; 4];
        for r in 0..8 {
            for col in 0..8 {
                oracle[t.get(r, col) as usize][p.get(r, col) as usize] += 1;
            }
        }
        assert_eq!(c.counts, oracle);
    }

    #[test]
    fn overlapping_squares() {
        // truth square at cols 0..2, pred square shifted by one column, rows 0..2
        let mut truth = LabelMap::background(4, 4);
        let mut pred = LabelMap::background(4, 4);
        for r in 0..2 {
            for c in 0..2 {
                truth.set(r, c, 1).unwrap();
                pred.set(r, c + 1, 1).unwrap();
            }
        }
        let m = per_class_metrics(&confusion(&pred, &truth).unwrap())[1];
        assert!((m.iou.unwrap() - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(m.pp, Some(0.5));
        assert_eq!(m.pr, Some(0.5));
    }

    #[test]
    fn undefined_ratios_are_excluded() {
        let truth = LabelMap::background(2, 2);
        let c = confusion(&truth, &truth).unwrap();
        let r = MetricReport::dense(&c);
        assert_eq!(r.per_class[2].iou, None);
        assert_eq!(r.iou.classes, vec![0]);
        assert_eq!(r.iou.arithmetic, Some(1.0));
    }

    #[test]
    fn table_ii_fcn8s_rd_aggregates() {
        let ious = [0.997, 0.452, 0.155, 0.513];
        let m = arithmetic_mean(&ious).unwrap();
        let h = harmonic_mean(&ious).unwrap();
        assert!((100.0 * m - 52.9).abs() <= 0.05);
        assert!((100.0 * h - 34.4).abs() <= 0.05);
    }

    #[test]
    fn harmonic_zero_rule() {
        assert_eq!(harmonic_mean(&[0.5, 0.0, 1.0]), Some(0.0));
        assert_eq!(harmonic_mean(&[]), None);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            confusion(&LabelMap::background(2, 2), &LabelMap::background(2, 3)),
            Err(MetricsError::DimensionMismatch { .. })
        ));
        assert_eq!(LabelMap::new(1, 1, vec![4]), Err(MetricsError::InvalidLabel(4)));
        let pts = [SparsePoint { row: 5, col: 0, label: 1 }];
        assert!(matches!(
            sparse_eval(&LabelMap::background(2, 2), &pts),
            Err(MetricsError::PointOutOfBounds { .. })
        ));
    }

    #[test]
    fn sparse_examples() {
        let mut truth_map = LabelMap::background(6, 6);
        let pts: Vec<SparsePoint> = [(0, 0, 1), (1, 1, 1), (2, 3, 3), (5, 5, 2)]
            .into_iter()
            .map(|(row, col, label)| SparsePoint { row, col, label })
            .collect();
        for p in &pts {
            truth_map.set(p.row, p.col, p.label).unwrap();
        }
        let perfect = sparse_eval(&truth_map, &pts).unwrap();
        for k in 1..4 {
            assert_eq!(perfect.per_class[k].pr, Some(1.0));
        }
        let blank = sparse_eval(&LabelMap::background(6, 6), &pts).unwrap();
        for k in 1..4 {
            assert_eq!(blank.per_class[k].pr, Some(0.0));
        }
        assert_eq!(blank.pr.harmonic, Some(0.0));
        assert_eq!(blank.iou, Aggregate::default());
    }

    #[test]
    fn sparse_matches_restricted_scan() {
        let pred = random_map(9, 10, 10);
        let mut rng = rng_from_seed(10);
        let pts: Vec<SparsePoint> = (0..30)
            .map(|_| SparsePoint {
                row: rng.random_range(0..10),
                col: rng.random_range(0..10),
                label: rng.random_range(1..4),
            })
            .collect();
        let report = sparse_eval(&pred, &pts).unwrap();
        for k in 1..4u8 {
            let tp = pts.iter().filter(|p| p.label == k && pred.get(p.row, p.col) == k).count();
            let truth_k = pts.iter().filter(|p| p.label == k).count();
            let pred_k = pts.iter().filter(|p| pred.get(p.row, p.col) == k).count();
            assert_eq!(report.per_class[k as usize].pr, ratio(tp as u64, truth_k as u64));
            assert_eq!(report.per_class[k as usize].pp, ratio(tp as u64, pred_k as u64));
        }
    }

    proptest! {
        #[test]
        fn iou_identity_and_bounds(counts in proptest::array::uniform4(proptest::array::uniform4(0u64..50))) {
            let c = Confusion { counts };
            for m in per_class_metrics(&c) {
                if let (Some(iou), Some(pp), Some(pr)) = (m.iou, m.pp, m.pr) {
                    prop_assert!(iou <= pp.min(pr) + 1e-12);
                    if pp + pr - pp * pr > 0.0 {
                        prop_assert!((iou - pp * pr / (pp + pr - pp * pr)).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn harmonic_below_arithmetic_and_order_free(mut v in proptest::collection::vec(0.0f64..=1.0, 1..6)) {
            let (a, h) = (arithmetic_mean(&v).unwrap(), harmonic_mean(&v).unwrap());
            prop_assert!(h <= a + 1e-12);
            v.reverse();
            prop_assert!((arithmetic_mean(&v).unwrap() - a).abs() < 1e-12);
            prop_assert!((harmonic_mean(&v).unwrap() - h).abs() < 1e-12);
        }
    }
}
