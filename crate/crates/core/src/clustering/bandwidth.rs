use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dist_sq, js_divergence, mean_shift, Cluster, ClusteringError, Gaussian, MeanShiftParams, Point3};

/// Ordered candidate bandwidths, in normalized cloud units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BandwidthGrid {
    values: Vec<f64>,
}

impl BandwidthGrid {
    /// Validates strict increase and positivity. Grids shorter than three are
    /// accepted here and rejected by [`select_bandwidth`].
    pub fn new(values: Vec<f64>) -> Result<Self, ClusteringError> {
        if values.is_empty() {
            return Err(ClusteringError::InvalidGrid("grid is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ClusteringError::InvalidGrid("all bandwidths must be finite and > 0".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ClusteringError::InvalidGrid("bandwidths must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `count` values geometrically spaced over `[lo, hi]`.
    pub fn geometric(lo: f64, hi: f64, count: usize) -> Result<Self, ClusteringError> {
        if count < 2 || !(lo > 0.0 && hi > lo) {
            return Err(ClusteringError::InvalidGrid(format!(
                "cannot space {count} values over [{lo}, {hi}]"
            )));
        }
        let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
        let mut values: Vec<f64> = (0..count).map(|i| lo * ratio.powi(i as i32)).collect();
        values[count - 1] = hi;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for BandwidthGrid {
    fn default() -> Self {
        Self::geometric(0.1, 2.0, 16).expect("default grid is valid")
    }
}

impl TryFrom<Vec<f64>> for BandwidthGrid {
    type Error = ClusteringError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<BandwidthGrid> for Vec<f64> {
    fn from(g: BandwidthGrid) -> Self {
        g.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionParams {
    pub mc_samples: usize,
    pub rng_seed: u64,
    pub mean_shift: MeanShiftParams,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            mc_samples: 4096,
            rng_seed: 0,
            mean_shift: MeanShiftParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSelection {
    pub index: usize,
    pub sigma: f64,
    pub cluster: Cluster,
    /// Cluster nearest the seed for every grid value.
    pub candidates: Vec<Cluster>,
    /// `JS(p_b‖p_{b-1}) + JS(p_b‖p_{b+1})` for `b = 1 ..= B-2`.
    pub scores: Vec<f64>,
}

fn nearest_cluster(clusters: Vec<Cluster>, seed: &Point3) -> Cluster {
    let mut best: Option<(f64, Cluster)> = None;
    for c in clusters {
        let d = dist_sq(&c.centroid, seed);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, c));
        }
    }
    best.expect("mean_shift returns at least one cluster").1
}

/// Picks the bandwidth whose seed cluster is most stable across the grid.
///
/// For every `σ_b` the cluster whose centroid is nearest `seed_point` is kept
/// and a Gaussian fitted to it. The winner minimizes the summed JS distance to
/// both grid neighbours over the interior indices; ties go to the smaller
/// index.
pub fn select_bandwidth(
    points: &[Point3],
    seed_point: &Point3,
    grid: &BandwidthGrid,
    params: &SelectionParams,
) -> Result<BandwidthSelection, ClusteringError> {
    if grid.len() < 3 {
        return Err(ClusteringError::GridTooSmall(grid.len()));
    }
    if points.is_empty() {
        return Err(ClusteringError::EmptyCloud);
    }

    let candidates: Vec<(Cluster, Gaussian)> = grid
        .values()
        .par_iter()
        .map(|&sigma| {
            let clusters = mean_shift(points, sigma, &params.mean_shift)?;
            let nearest = nearest_cluster(clusters, seed_point);
            let g = nearest.gaussian(sigma);
            Ok((nearest, g))
        })
        .collect::<Result<_, ClusteringError>>()?;

    let pair_js: Vec<f64> = candidates
        .par_windows(2)
        .map(|w| js_divergence(&w[0].1, &w[1].1, params.mc_samples, params.rng_seed))
        .collect::<Result<_, _>>()?;

    let scores: Vec<f64> = pair_js.windows(2).map(|w| w[0] + w[1]).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    let index = best + 1;
    let candidates: Vec<Cluster> = candidates.into_iter().map(|(c, _)| c).collect();
    Ok(BandwidthSelection {
        index,
        sigma: grid.values()[index],
        cluster: candidates[index].clone(),
        candidates,
        scores,
    })
}
