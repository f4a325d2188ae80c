//! Multivariate Gaussian measures.
//!
//! The stationary law of the SGD chain is `N(θ*, Σ)` with
//! `AΣ + ΣA = (η/|S|) C`; the prior is `N(0, I)`. KL divergences between such
//! measures drive every bound in [`crate::bounds`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{solve_continuous_lyapunov, SpdMatrix, Strictness, SymmetricMatrix};
use crate::seed::rng_from_seed;

/// Slack below zero tolerated (and clamped) in closed-form KL values.
pub const KL_NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    covariance: SpdMatrix,
}

impl GaussianMeasure {
    /// `covariance` must be strictly positive definite.
    pub fn new(mean: DVector<f64>, covariance: SpdMatrix) -> Result<Self> {
        if mean.len() != covariance.dim() {
            return Err(Error::DimensionMismatch {
                context: "GaussianMeasure::new",
                expected: covariance.dim(),
                found: mean.len(),
            });
        }
        if !covariance.is_strict() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: covariance.min_eigenvalue(),
            });
        }
        Ok(GaussianMeasure { mean, covariance })
    }

    /// `N(0, I_dim)`.
    pub fn standard(dim: usize) -> Self {
        GaussianMeasure {
            mean: DVector::zeros(dim),
            covariance: SpdMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.covariance
    }

    /// `−½(d ln 2π + ln det Σ)`.
    pub fn log_normalizer(&self) -> f64 {
        let log_det = self.covariance.log_det().expect("covariance is strict");
        -0.5 * (self.dim() as f64 * (2.0 * PI).ln() + log_det)
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "GaussianMeasure::log_density",
                expected: self.dim(),
                found: x.len(),
            });
        }
        let centered = x - &self.mean;
        Ok(self.log_normalizer() - 0.5 * self.covariance.inverse_quadratic_form(&centered)?)
    }
}

/// Stationary covariance of the continuous OU model:
/// the solution of `AΣ + ΣA = (lr/batch_size)·C`.
pub fn stationary_covariance(
    hessian: &SpdMatrix,
    noise_cov: &SpdMatrix,
    lr: f64,
    batch_size: usize,
) -> Result<SymmetricMatrix> {
    check_rate(lr, batch_size)?;
    if noise_cov.dim() != hessian.dim() {
        return Err(Error::DimensionMismatch {
            context: "stationary_covariance",
            expected: hessian.dim(),
            found: noise_cov.dim(),
        });
    }
    let rhs = noise_cov.symmetric().scaled(lr / batch_size as f64);
    solve_continuous_lyapunov(hessian, &rhs)
}

pub(crate) fn check_rate(lr: f64, batch_size: usize) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    Ok(())
}

/// The Gaussian stationary law `N(minimizer, Σ)` of SGD with learning rate
/// `lr`, batch size `batch_size` and per-example gradient-noise covariance
/// `noise_cov` on a quadratic with Hessian `hessian`.
pub fn stationary_from_dynamics(
    hessian: &SpdMatrix,
    minimizer: &DVector<f64>,
    noise_cov: &SpdMatrix,
    lr: f64,
    batch_size: usize,
) -> Result<GaussianMeasure> {
    if minimizer.len() != hessian.dim() {
        return Err(Error::DimensionMismatch {
            context: "stationary_from_dynamics",
            expected: hessian.dim(),
            found: minimizer.len(),
        });
    }
    let sigma = stationary_covariance(hessian, noise_cov, lr, batch_size)?;
    GaussianMeasure::new(minimizer.clone(), SpdMatrix::new(sigma, Strictness::Strict)?)
}

/// Closed-form `KL(q ‖ p)`:
/// `½[tr(Σp⁻¹Σq) − d + (μp−μq)ᵀΣp⁻¹(μp−μq) + ln det Σp − ln det Σq]`.
pub fn kl_divergence(q: &GaussianMeasure, p: &GaussianMeasure) -> Result<f64> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "kl_divergence",
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let d = q.dim() as f64;
    let lp = p.covariance.cholesky_factor()?;
    let lq = q.covariance.cholesky_factor()?;
    // tr(Σp⁻¹Σq) = ‖Lp⁻¹ Lq‖²_F
    let w = lp
        .solve_lower_triangular(lq)
        .expect("Cholesky factor has a positive diagonal");
    let trace_term = w.norm_squared();
    let mahalanobis = p.covariance.inverse_quadratic_form(&(&p.mean - &q.mean))?;
    let log_det_ratio = p.covariance.log_det()? - q.covariance.log_det()?;
    let kl = 0.5 * (trace_term - d + mahalanobis + log_det_ratio);
    clamp_kl(kl)
}

pub(crate) fn clamp_kl(kl: f64) -> Result<f64> {
    if kl >= 0.0 {
        Ok(kl)
    } else if kl > -KL_NEGATIVE_SLACK {
        Ok(0.0)
    } else {
        Err(Error::NegativeKl(kl))
    }
}

/// Draws `count` samples `x = μ + L z` (`L` lower Cholesky, `z` standard
/// normal). Rows of the result are samples.
pub fn sample(g: &GaussianMeasure, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let d = g.dim();
    let l = g.covariance.cholesky_factor()?;
    let mut rng = rng_from_seed(seed);
    let mut out = DMatrix::zeros(count, d);
    let mut z = vec![0.0; d];
    for r in 0..count {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for i in 0..d {
            let mut acc = g.mean[i];
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                acc += l[(i, k)] * zk;
            }
            out[(r, i)] = acc;
        }
    }
    Ok(out)
}

/// Unbiased sample mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub mean: DVector<f64>,
    pub covariance: SymmetricMatrix,
    pub sample_count: usize,
}

impl MomentEstimate {
    /// Computes moments over `rows` consecutive length-`dim` records in
    /// `data`. Two passes: mean first, then centered cross products.
    pub fn from_flat(data: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        let n = data.len() / dim;
        if n < 2 {
            return Err(Error::TooFewSamples { required: 2, found: n });
        }
        let mut mean = DVector::zeros(dim);
        for row in data.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(dim, dim);
        let mut centered = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(mean.iter()) {
                *c = v - m;
            }
            for j in 0..dim {
                for i in j..dim {
                    cov[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        for j in 0..dim {
            for i in j..dim {
                let v = cov[(i, j)] / (n - 1) as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(MomentEstimate {
            mean,
            covariance: SymmetricMatrix::new(cov)?,
            sample_count: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Per-coordinate `sqrt(var / n)`, valid for independent samples.
    pub fn iid_std_error(&self) -> DVector<f64> {
        let n = self.sample_count as f64;
        DVector::from_iterator(
            self.dim(),
            self.covariance.as_matrix().diagonal().iter().map(|v| (v / n).sqrt()),
        )
    }
}

/// Moments of the rows of `samples`.
pub fn empirical_moments(samples: &DMatrix<f64>) -> Result<MomentEstimate> {
    if samples.nrows() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: samples.nrows(),
        });
    }
    // DMatrix is column-major; transpose so each row becomes contiguous.
    let t = samples.transpose();
    MomentEstimate::from_flat(t.as_slice(), samples.ncols())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McKlEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Monte-Carlo `KL(q ‖ p) = E_q[ln q − ln p]` from `count` independent draws
/// of `q`. Returns the sample mean and its standard error.
pub fn mc_kl_estimate(q: &GaussianMeasure, p: &GaussianMeasure, count: usize, seed: u64) -> Result<McKlEstimate> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "mc_kl_estimate",
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if count < 1000 {
        return Err(Error::InvalidArgument(format!(
            "Monte-Carlo KL needs at least 1000 draws, got {count}"
        )));
    }
    let d = q.dim();
    let lq = q.covariance.cholesky_factor()?;
    let lp = p.covariance.cholesky_factor()?;
    let half_log_det_ratio = 0.5 * (p.covariance.log_det()? - q.covariance.log_det()?);
    let shift = &q.mean - &p.mean;
    let mut rng = rng_from_seed(seed);

    let mut z = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..count {
        let mut z_sq = 0.0;
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
            z_sq += *zi * *zi;
        }
        // y = Lp⁻¹ (x − μp) with x − μp = shift + Lq z, by forward substitution.
        let mut y_sq = 0.0;
        for i in 0..d {
            let mut r = shift[i];
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                r += lq[(i, j)] * zj;
            }
            for (j, yj) in y.iter().enumerate().take(i) {
                r -= lp[(i, j)] * yj;
            }
            y[i] = r / lp[(i, i)];
            y_sq += y[i] * y[i];
        }
        let value = half_log_det_ratio - 0.5 * z_sq + 0.5 * y_sq;
        let delta = value - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (value - mean);
    }
    let variance = m2 / (count - 1) as f64;
    Ok(McKlEstimate {
        estimate: mean,
        std_error: (variance / count as f64).sqrt(),
        count,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::linalg::random_spd;
    use approx::assert_relative_eq;

    fn diag_gaussian(mean: &[f64], var: &[f64]) -> GaussianMeasure {
        GaussianMeasure::new(
            DVector::from_column_slice(mean),
            SpdMatrix::from_diagonal(var, Strictness::Strict).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn stationary_identity_case() {
        let g = stationary_from_dynamics(
            &SpdMatrix::identity(3),
            &DVector::zeros(3),
            &SpdMatrix::identity(3),
            0.2,
            10,
        )
        .unwrap();
        assert!((g.covariance().as_matrix() - DMatrix::<f64>::identity(3, 3) * 0.01).amax() < 1e-16);
    }

    #[test]
    fn stationary_diagonal_case() {
        let a = SpdMatrix::from_diagonal(&[1.0, 2.0], Strictness::Strict).unwrap();
        let g = stationary_from_dynamics(&a, &DVector::zeros(2), &SpdMatrix::identity(2), 0.1, 1).unwrap();
        let s = g.covariance().as_matrix();
        assert_relative_eq!(s[(0, 0)], 0.05, epsilon = 1e-15);
        assert_relative_eq!(s[(1, 1)], 0.025, epsilon = 1e-15);
    }

    #[test]
    fn stationary_trace_identity() {
        let a = random_spd(6, 0.2, 5.0, 21).unwrap();
        let c = random_spd(6, 0.1, 3.0, 22).unwrap();
        let (lr, batch) = (0.03, 4);
        let g = stationary_from_dynamics(&a, &DVector::zeros(6), &c, lr, batch).unwrap();
        let s = g.covariance().as_matrix();
        let r = a.as_matrix() * s + s * a.as_matrix() - c.as_matrix() * (lr / batch as f64);
        assert!(r.norm() < 1e-10);
        // tr Σ = ½(η/|S|) tr(C A⁻¹)
        let ca_inv = c.as_matrix() * a.inverse().unwrap().as_matrix();
        let expected = 0.5 * lr / batch as f64 * ca_inv.trace();
        assert!((s.trace() - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn stationary_dimension_mismatch() {
        let err = stationary_from_dynamics(
            &SpdMatrix::identity(2),
            &DVector::zeros(3),
            &SpdMatrix::identity(2),
            0.1,
            1,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kl_examples() {
        let std2 = GaussianMeasure::standard(2);
        assert_eq!(kl_divergence(&std2, &std2).unwrap(), 0.0);
        let q = diag_gaussian(&[0.0, 0.0], &[0.05, 0.025]);
        // 30-digit evaluation: ½(0.075 − 2 − ln 0.00125)
        assert_relative_eq!(kl_divergence(&q, &std2).unwrap(), 2.379805863833963615531, epsilon = 1e-13);
        let shifted = diag_gaussian(&[1.0, 0.0], &[1.0, 1.0]);
        assert_relative_eq!(kl_divergence(&shifted, &std2).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kl_dimension_mismatch() {
        assert!(matches!(
            kl_divergence(&GaussianMeasure::standard(2), &GaussianMeasure::standard(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tiny_covariance_rejected() {
        let tiny = SpdMatrix::from_diagonal(&[1e-18, 1e-18], Strictness::Strict);
        assert!(matches!(tiny, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn sample_is_deterministic_and_centered() {
        let g = GaussianMeasure::standard(2);
        let a = sample(&g, 1000, 5).unwrap();
        let b = sample(&g, 1000, 5).unwrap();
        assert_eq!(a, b);
        let big = sample(&g, 1_000_000, 1).unwrap();
        let m = empirical_moments(&big).unwrap();
        for i in 0..2 {
            assert!(m.mean[i].abs() < 4.0 / 1000.0, "{}", m.mean[i]);
        }
        assert!((m.covariance.as_matrix() - DMatrix::<f64>::identity(2, 2)).norm() < 0.02);
    }

    #[test]
    fn two_point_moments() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 2.0]);
        let m = empirical_moments(&s).unwrap();
        assert_eq!(m.mean.as_slice(), &[1.0, 1.0]);
        assert_eq!(m.covariance.as_matrix(), &DMatrix::from_element(2, 2, 2.0));
        assert_eq!(m.sample_count, 2);
    }

    #[test]
    fn single_row_is_too_few() {
        let s = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(
            empirical_moments(&s).unwrap_err(),
            Error::TooFewSamples { required: 2, found: 1 }
        );
    }

    #[test]
    fn mc_kl_identical_measures() {
        let g = GaussianMeasure::standard(3);
        let est = mc_kl_estimate(&g, &g, 10_000, 3).unwrap();
        assert!(est.estimate.abs() <= 3.0 * est.std_error.max(1e-300));
    }

    #[test]
    fn mc_kl_matches_closed_form() {
        let p = GaussianMeasure::standard(2);
        for (q, exact) in [
            (diag_gaussian(&[0.0, 0.0], &[0.05, 0.025]), 2.379805863833963615531),
            (diag_gaussian(&[1.0, 0.0], &[1.0, 1.0]), 0.5),
        ] {
            let est = mc_kl_estimate(&q, &p, 1_000_000, 17).unwrap();
            assert!(
                (est.estimate - exact).abs() <= 3.0 * est.std_error,
                "{} vs {exact} (se {})",
                est.estimate,
                est.std_error
            );
        }
    }

    #[test]
    fn mc_kl_requires_enough_draws() {
        let g = GaussianMeasure::standard(1);
        assert!(mc_kl_estimate(&g, &g, 999, 0).is_err());
    }

    #[test]
    fn log_density_matches_normalizer_at_mean() {
        let g = diag_gaussian(&[1.0, -1.0], &[2.0, 0.5]);
        assert_relative_eq!(g.log_density(g.mean()).unwrap(), g.log_normalizer());
        assert_relative_eq!(g.log_normalizer(), -(2.0 * PI).ln(), epsilon = 1e-15);
    }
}
