use log::debug;
use serde::{Deserialize, Serialize};

use super::{dist_sq, fit_gaussian, ClusteringError, Gaussian, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanShiftParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 300,
        }
    }
}

/// A Mean-Shift cluster with its fitted Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Indices into the clustered point slice, ascending.
    pub members: Vec<usize>,
    pub member_points: Vec<Point3>,
    /// Converged mode shared by the members.
    pub centroid: Point3,
    pub fitted_mean: Point3,
    pub fitted_covariance: [[f64; 3]; 3],
    /// False if any member hit `max_iter` before the step fell under `tol`.
    pub converged: bool,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Distribution used for bandwidth comparison. With no more points than
    /// dimensions the sample covariance is singular, so such clusters get
    /// `σ² I` around their mean instead.
    pub fn gaussian(&self, sigma: f64) -> Gaussian {
        if self.len() <= 3 {
            return Gaussian::isotropic(&self.fitted_mean, sigma);
        }
        match fit_gaussian(&self.member_points) {
            Ok(g) => g,
            Err(_) => Gaussian::isotropic(&self.fitted_mean, sigma),
        }
    }
}

/// Unnormalized Gaussian kernel density estimate at `x`.
pub fn kde(points: &[Point3], x: &Point3, sigma: f64) -> f64 {
    let inv = 1.0 / (2.0 * sigma * sigma);
    points.iter().map(|p| (-dist_sq(p, x) * inv).exp()).sum()
}

/// Kernel support cutoff in bandwidths; weights beyond it are below 1e-13
/// of the nearest point's.
const CUTOFF_SIGMAS: f64 = 8.0;

/// Points sorted by x so each update only visits the kernel's support.
struct Neighbors<'a> {
    points: &'a [Point3],
    order: Vec<usize>,
    xs: Vec<f64>,
}

impl<'a> Neighbors<'a> {
    fn new(points: &'a [Point3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
        let xs = order.iter().map(|&i| points[i][0]).collect();
        Self { points, order, xs }
    }

    /// One weighted-mean update.
    fn shift(&self, x: &Point3, sigma: f64) -> Point3 {
        let cut = CUTOFF_SIGMAS * sigma;
        let lo = self.xs.partition_point(|&v| v < x[0] - cut);
        let hi = self.xs.partition_point(|&v| v <= x[0] + cut);
        let window = self.order[lo..hi].iter().map(|&i| &self.points[i]);
        match weighted_mean(window, x, sigma, cut * cut) {
            Some(m) => m,
            None => weighted_mean(self.points.iter(), x, sigma, f64::INFINITY).expect("non-empty cloud"),
        }
    }
}

/// Gaussian-weighted mean of `points` around `x`, or `None` when no point lies
/// within `sqrt(max_d2_min)` (the window may then miss the nearest point).
fn weighted_mean<'p>(
    points: impl Iterator<Item = &'p Point3> + Clone,
    x: &Point3,
    sigma: f64,
    max_d2_min: f64,
) -> Option<Point3> {
    let inv = 1.0 / (2.0 * sigma * sigma);
    // weights relative to the nearest point so they never all underflow
    let d2_min = points.clone().map(|p| dist_sq(p, x)).fold(f64::INFINITY, f64::min);
    if !(d2_min <= max_d2_min) {
        return None;
    }
    let mut num = [0.0; 3];
    let mut den = 0.0;
    for p in points {
        let w = (-(dist_sq(p, x) - d2_min) * inv).exp();
        den += w;
        for k in 0..3 {
            num[k] += w * p[k];
        }
    }
    Some([num[0] / den, num[1] / den, num[2] / den])
}

/// Iterates one starting point to convergence. Returns the visited iterates
/// (starting point first) and whether the final step was below `tol`.
pub fn mean_shift_path(
    points: &[Point3],
    start: Point3,
    sigma: f64,
    params: &MeanShiftParams,
) -> (Vec<Point3>, bool) {
    let index = Neighbors::new(points);
    let mut path = vec![start];
    let mut x = start;
    for _ in 0..params.max_iter {
        let next = index.shift(&x, sigma);
        let step = dist_sq(&next, &x).sqrt();
        x = next;
        path.push(x);
        if step < params.tol {
            return (path, true);
        }
    }
    (path, false)
}

fn converge(index: &Neighbors, start: Point3, sigma: f64, params: &MeanShiftParams) -> (Point3, bool) {
    let mut x = start;
    for _ in 0..params.max_iter {
        let next = index.shift(&x, sigma);
        let step = dist_sq(&next, &x).sqrt();
        x = next;
        if step < params.tol {
            return (x, true);
        }
    }
    (x, false)
}

/// Mean-Shift with a spherical Gaussian kernel of bandwidth `sigma`.
///
/// Every point is shifted to convergence; points whose final locations lie
/// within `sigma / 2` of a cluster's first mode join that cluster. Clusters are
/// ordered by their lowest member index.
pub fn mean_shift(points: &[Point3], sigma: f64, params: &MeanShiftParams) -> Result<Vec<Cluster>, ClusteringError> {
    if points.is_empty() {
        return Err(ClusteringError::EmptyCloud);
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(ClusteringError::InvalidBandwidth(sigma));
    }
    let merge_sq = (sigma / 2.0).powi(2);
    let index = Neighbors::new(points);

    struct Group {
        mode: Point3,
        members: Vec<usize>,
        finals: Vec<Point3>,
        converged: bool,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let (final_x, ok) = converge(&index, *p, sigma, params);
        if !ok {
            debug!("mean-shift point {i} did not converge in {} iterations", params.max_iter);
        }
        match groups.iter_mut().find(|g| dist_sq(&g.mode, &final_x) <= merge_sq) {
            Some(g) => {
                g.members.push(i);
                g.finals.push(final_x);
                g.converged &= ok;
            }
            None => groups.push(Group {
                mode: final_x,
                members: vec![i],
                finals: vec![final_x],
                converged: ok,
            }),
        }
    }

    Ok(groups
        .into_iter()
        .map(|g| {
            let member_points: Vec<Point3> = g.members.iter().map(|&i| points[i]).collect();
            let fitted = match fit_gaussian(&member_points) {
                Ok(gauss) => gauss,
                Err(_) => Gaussian::isotropic(&member_points[0], sigma),
            };
            Cluster {
                centroid: mean_of(&g.finals),
                fitted_mean: fitted.mean3(),
                fitted_covariance: fitted.covariance3(),
                members: g.members,
                member_points,
                converged: g.converged,
            }
        })
        .collect())
}

pub(crate) fn mean_of(points: &[Point3]) -> Point3 {
    let n = points.len() as f64;
    let mut m = [0.0; 3];
    for p in points {
        for k in 0..3 {
            m[k] += p[k];
        }
    }
    m.map(|v| v / n)
}
