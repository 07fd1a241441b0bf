use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ClusteringError, Point3};
use crate::seed::{derive_seed, rng_from_seed};

/// Ridge added to fitted covariances.
pub const COVARIANCE_EPSILON: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Multivariate normal distribution with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, ClusteringError> {
        let d = mean.len();
        if d == 0 || cov.nrows() != d || cov.ncols() != d {
            return Err(ClusteringError::InvalidArgument(format!(
                "mean of dimension {d} with a {}x{} covariance",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-9 * scale {
            return Err(ClusteringError::SingularCovariance);
        }
        let chol = cov.clone().cholesky().ok_or(ClusteringError::SingularCovariance)?.unpack();
        let log_det: f64 = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(ClusteringError::SingularCovariance);
        }
        Ok(Self {
            log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
            mean,
            cov,
            chol,
        })
    }

    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self, ClusteringError> {
        let d = mean.len();
        if cov_row_major.len() != d * d {
            return Err(ClusteringError::InvalidArgument("covariance length is not d^2".into()));
        }
        Self::new(DVector::from_row_slice(mean), DMatrix::from_row_slice(d, d, cov_row_major))
    }

    /// `N(mean, σ² I)`.
    pub fn isotropic(mean: &[f64], sigma: f64) -> Self {
        let d = mean.len();
        Self::new(DVector::from_row_slice(mean), DMatrix::identity(d, d) * (sigma * sigma))
            .expect("isotropic covariance with sigma > 0 is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub(crate) fn mean3(&self) -> Point3 {
        [self.mean[0], self.mean[1], self.mean[2]]
    }

    pub(crate) fn covariance3(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.cov[(i, j)];
            }
        }
        out
    }

    pub fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let z = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a non-zero diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        &self.mean + &self.chol * z
    }

    /// Total order on parameters, used to seed divergence estimates symmetrically.
    fn parameter_cmp(&self, other: &Self) -> Ordering {
        self.mean
            .iter()
            .chain(self.cov.iter())
            .zip(other.mean.iter().chain(other.cov.iter()))
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Sample mean and unbiased covariance of 3D points, ridged by `εI`.
pub fn fit_gaussian(points: &[Point3]) -> Result<Gaussian, ClusteringError> {
    let n = points.len();
    if n < 2 {
        return Err(ClusteringError::DegenerateCluster(n));
    }
    let mean = super::mean_shift::mean_of(points);
    let mut cov = DMatrix::<f64>::zeros(3, 3);
    for p in points {
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    cov /= (n - 1) as f64;
    for i in 0..3 {
        cov[(i, i)] += COVARIANCE_EPSILON;
    }
    Gaussian::new(DVector::from_row_slice(&mean), cov)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Monte-Carlo `KL(p ‖ (p+q)/2)` with samples drawn from `p`.
fn kl_to_mixture(p: &Gaussian, q: &Gaussian, samples: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let ln_half = 0.5f64.ln();
    let mut acc = 0.0;
    for _ in 0..samples {
        let x = p.sample(&mut rng);
        let lp = p.log_pdf(&x);
        let lq = q.log_pdf(&x);
        acc += lp - (ln_half + log_sum_exp(lp, lq));
    }
    acc / samples as f64
}

/// Jensen-Shannon distance `sqrt((KL(p‖m) + KL(q‖m)) / 2)`, `m = (p+q)/2`,
/// each KL estimated from `mc_samples` draws.
///
/// The random stream used for each side depends on the side's parameters,
/// not on argument order, so `js(p, q) == js(q, p)` bit for bit.
pub fn js_divergence(g1: &Gaussian, g2: &Gaussian, mc_samples: usize, rng_seed: u64) -> Result<f64, ClusteringError> {
    if g1.dim() != g2.dim() {
        return Err(ClusteringError::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            g1.dim(),
            g2.dim()
        )));
    }
    if mc_samples == 0 {
        return Err(ClusteringError::InvalidArgument("mc_samples must be >= 1".into()));
    }
    let (rank1, rank2) = match g1.parameter_cmp(g2) {
        Ordering::Greater => (1, 0),
        _ => (0, 1),
    };
    let kl1 = kl_to_mixture(g1, g2, mc_samples, derive_seed(rng_seed, "js", rank1, 0));
    let kl2 = kl_to_mixture(g2, g1, mc_samples, derive_seed(rng_seed, "js", rank2, 0));
    let (lo, hi) = if rank1 == 0 { (kl1, kl2) } else { (kl2, kl1) };
    Ok(((lo + hi) / 2.0).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1d(mean: f64, sd: f64) -> Gaussian {
        Gaussian::from_slices(&[mean], &[sd * sd]).unwrap()
    }

    #[test]
    fn two_point_statistics() {
        let g = fit_gaussian(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(g.mean3(), [1.0, 0.0, 0.0]);
        let c = g.covariance3();
        assert!((c[0][0] - (2.0 + COVARIANCE_EPSILON)).abs() < 1e-15);
        assert_eq!(c[1][1], COVARIANCE_EPSILON);
        assert_eq!(c[2][2], COVARIANCE_EPSILON);
        assert_eq!(c[0][1], 0.0);
    }

    #[test]
    fn identical_members_give_ridge_only() {
        let g = fit_gaussian(&[[3.0, 1.0, -2.0]; 5]).unwrap();
        let c = g.covariance3();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { COVARIANCE_EPSILON } else { 0.0 };
                assert_eq!(c[i][j], expect);
            }
        }
    }

    #[test]
    fn degenerate_cluster() {
        assert_eq!(fit_gaussian(&[[0.0; 3]]), Err(ClusteringError::DegenerateCluster(1)));
        assert_eq!(fit_gaussian(&[]), Err(ClusteringError::DegenerateCluster(0)));
    }

    #[test]
    fn sampling_recovers_generator() {
        let truth = Gaussian::from_slices(&[1.0, -2.0, 0.5], &[2.0, 0.6, 0.0, 0.6, 1.0, -0.3, 0.0, -0.3, 0.5]).unwrap();
        let mut rng = rng_from_seed(77);
        let pts: Vec<Point3> = (0..10_000)
            .map(|_| {
                let s = truth.sample(&mut rng);
                [s[0], s[1], s[2]]
            })
            .collect();
        let fit = fit_gaussian(&pts).unwrap();
        for i in 0..3 {
            let m = truth.mean()[i];
            assert!((fit.mean()[i] - m).abs() <= 0.05 * m.abs(), "mean {i}");
            let v = truth.covariance()[(i, i)];
            assert!((fit.covariance()[(i, i)] - v).abs() <= 0.05 * v, "var {i}");
        }
        // off-diagonals: 5% of the generator's scale
        for (i, j) in [(0, 1), (1, 2)] {
            let c = truth.covariance()[(i, j)];
            assert!((fit.covariance()[(i, j)] - c).abs() <= 0.05 * c.abs().max(0.5), "cov {i}{j}");
        }
    }

    #[test]
    fn log_pdf_matches_closed_form_1d() {
        let g = g1d(2.0, 3.0);
        let x = DVector::from_element(1, 4.5);
        let expect = -0.5 * (2.0 * std::f64::consts::PI * 9.0).ln() - 0.5 * (2.5f64 / 3.0).powi(2);
        assert!((g.log_pdf(&x) - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_pd() {
        assert_eq!(
            Gaussian::from_slices(&[0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]),
            Err(ClusteringError::SingularCovariance)
        );
        assert_eq!(
            Gaussian::from_slices(&[0.0, 0.0], &[1.0, 0.5, 0.0, 1.0]),
            Err(ClusteringError::SingularCovariance)
        );
    }

    #[test]
    fn js_identity_symmetry_and_limit() {
        let a = Gaussian::from_slices(&[0.0, 1.0, 2.0], &[1.0, 0.2, 0.0, 0.2, 0.5, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let b = Gaussian::isotropic(&[0.5, 1.0, 1.0], 0.8);
        assert!(js_divergence(&a, &a, 4096, 3).unwrap() < 1e-3);
        assert_eq!(js_divergence(&a, &b, 4096, 3).unwrap(), js_divergence(&b, &a, 4096, 3).unwrap());
        let far = js_divergence(&g1d(0.0, 1.0), &g1d(20.0, 1.0), 20_000, 5).unwrap();
        assert!((far - 2f64.ln().sqrt()).abs() < 0.02, "{far}");
        let js = js_divergence(&a, &b, 512, 8).unwrap();
        assert!(js >= 0.0 && js <= 2f64.ln().sqrt() + 0.05);
    }

    #[test]
    fn js_argument_errors() {
        let a = g1d(0.0, 1.0);
        let b = Gaussian::isotropic(&[0.0, 0.0], 1.0);
        assert!(js_divergence(&a, &b, 10, 0).is_err());
        assert!(js_divergence(&a, &a, 0, 0).is_err());
    }
}
