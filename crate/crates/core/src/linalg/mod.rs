//! Dense symmetric linear algebra for small dimensions.
//!
//! All matrices are `nalgebra::DMatrix<f64>`. [`SymmetricMatrix`] guarantees
//! exact symmetry; [`SpdMatrix`] additionally carries its eigendecomposition
//! and, when strictly positive definite, its lower Cholesky factor.

mod io;
mod lyapunov;

pub use io::{format_matrix, format_vector, parse_matrix, parse_vector};
pub use lyapunov::{solve_continuous_lyapunov, solve_discrete_stein, spectral_radius};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Relative eigenvalue tolerance used to classify definiteness.
pub const PSD_RELATIVE_TOL: f64 = 1e-10;

/// A square matrix with `m[i][j] == m[j][i]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Symmetrizes `(M + Mᵀ)/2`. Rejects empty, non-square and non-finite input.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_square(&entries)?;
        let mut m = entries;
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(SymmetricMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        SymmetricMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymmetricMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymmetricMatrix(&self.0 * factor)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Every eigenvalue above the tolerance.
    Strict,
    /// Every eigenvalue above minus the tolerance.
    Semidefinite,
}

/// A symmetric positive (semi-)definite matrix.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    matrix: SymmetricMatrix,
    strictness: Strictness,
    /// Ascending.
    eigenvalues: DVector<f64>,
    /// Columns ordered to match `eigenvalues`.
    eigenvectors: DMatrix<f64>,
    cholesky: Option<DMatrix<f64>>,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.strictness == other.strictness
    }
}

/// Builds an [`SpdMatrix`] from a dense square matrix, symmetrizing first.
pub fn make_spd(entries: DMatrix<f64>, strictness: Strictness) -> Result<SpdMatrix> {
    SpdMatrix::new(SymmetricMatrix::new(entries)?, strictness)
}

/// Natural-log determinant of a strictly positive definite matrix.
pub fn log_det(m: &SpdMatrix) -> Result<f64> {
    m.log_det()
}

impl SpdMatrix {
    pub fn new(matrix: SymmetricMatrix, strictness: Strictness) -> Result<Self> {
        let eig = SymmetricEigen::new(matrix.as_matrix().clone());
        let n = matrix.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            eigenvectors.set_column(col, &eig.eigenvectors.column(k));
        }

        let lambda_min = eigenvalues[0];
        let scale = eigenvalues.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let tol = PSD_RELATIVE_TOL * scale;
        let admissible = match strictness {
            Strictness::Strict => lambda_min > tol,
            Strictness::Semidefinite => lambda_min > -tol,
        };
        if !admissible {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: lambda_min });
        }

        let cholesky = match strictness {
            Strictness::Strict => Some(
                nalgebra::Cholesky::new(matrix.as_matrix().clone())
                    .ok_or(Error::NotPositiveDefinite { min_eigenvalue: lambda_min })?
                    .unpack(),
            ),
            Strictness::Semidefinite => nalgebra::Cholesky::new(matrix.as_matrix().clone())
                .filter(|_| lambda_min > tol)
                .map(|c| c.unpack()),
        };

        Ok(SpdMatrix {
            matrix,
            strictness,
            eigenvalues,
            eigenvectors,
            cholesky,
        })
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix::new(SymmetricMatrix::identity(dim), Strictness::Strict)
            .expect("identity is positive definite")
    }

    pub fn from_diagonal(diag: &[f64], strictness: Strictness) -> Result<Self> {
        SpdMatrix::new(SymmetricMatrix::from_diagonal(diag), strictness)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn symmetric(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.matrix.as_matrix()
    }

    pub fn strictness(&self) -> Strictness {
        self.strictness
    }

    /// True when the matrix has a Cholesky factor (strictly definite).
    pub fn is_strict(&self) -> bool {
        self.cholesky.is_some()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    fn factor(&self) -> Result<&DMatrix<f64>> {
        self.cholesky.as_ref().ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: self.min_eigenvalue(),
        })
    }

    /// Lower Cholesky factor `L` with `L Lᵀ = self`.
    pub fn cholesky_factor(&self) -> Result<&DMatrix<f64>> {
        self.factor()
    }

    /// `2 Σ ln L_ii`.
    pub fn log_det(&self) -> Result<f64> {
        let l = self.factor()?;
        Ok(2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>())
    }

    /// Solves `self · X = rhs` via the Cholesky factor.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let l = self.factor()?;
        if rhs.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "SpdMatrix::solve",
                expected: self.dim(),
                found: rhs.nrows(),
            });
        }
        let y = l
            .solve_lower_triangular(rhs)
            .expect("Cholesky factor has a positive diagonal");
        Ok(l.tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal"))
    }

    pub fn solve_vector(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let m = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
        let x = self.solve(&m)?;
        Ok(DVector::from_column_slice(x.as_slice()))
    }

    /// `xᵀ self⁻¹ x`, computed as `‖L⁻¹x‖²`.
    pub fn inverse_quadratic_form(&self, x: &DVector<f64>) -> Result<f64> {
        let l = self.factor()?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "SpdMatrix::inverse_quadratic_form",
                expected: self.dim(),
                found: x.len(),
            });
        }
        let y = l
            .solve_lower_triangular(x)
            .expect("Cholesky factor has a positive diagonal");
        Ok(y.norm_squared())
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        let inv = self.solve(&DMatrix::identity(self.dim(), self.dim()))?;
        make_spd(inv, Strictness::Strict)
    }

    /// Multiplies by a positive scalar, keeping the factorization consistent.
    pub fn scaled(&self, factor: f64) -> Result<SpdMatrix> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "SPD scale factor must be positive and finite, got {factor}"
            )));
        }
        SpdMatrix::new(self.matrix.scaled(factor), self.strictness)
    }
}

pub(crate) fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::Empty);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `diag(R)` folded into `Q`.
pub fn random_orthogonal<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random SPD matrix `Q diag(λ) Qᵀ` with `λ_i ~ U[low, high]` and `Q` a random
/// orthogonal matrix. Deterministic in `seed`.
pub fn random_spd(dim: usize, eigenvalue_low: f64, eigenvalue_high: f64, seed: u64) -> Result<SpdMatrix> {
    let mut rng = rng_from_seed(seed);
    random_spd_with(dim, eigenvalue_low, eigenvalue_high, &mut rng)
}

/// As [`random_spd`], drawing from a caller-supplied generator.
pub fn random_spd_with<R: rand::Rng + ?Sized>(
    dim: usize,
    eigenvalue_low: f64,
    eigenvalue_high: f64,
    rng: &mut R,
) -> Result<SpdMatrix> {
    if !(eigenvalue_low > 0.0 && eigenvalue_low <= eigenvalue_high && eigenvalue_high.is_finite()) {
        return Err(Error::InvalidRange {
            low: eigenvalue_low,
            high: eigenvalue_high,
        });
    }
    if dim == 0 {
        return Err(Error::Empty);
    }
    let spectrum: Vec<f64> = if eigenvalue_low == eigenvalue_high {
        vec![eigenvalue_low; dim]
    } else {
        let u = Uniform::new_inclusive(eigenvalue_low, eigenvalue_high).expect("valid range");
        (0..dim).map(|_| u.sample(rng)).collect()
    };
    let q = random_orthogonal(dim, rng);
    let d = DMatrix::from_diagonal(&DVector::from_vec(spectrum));
    make_spd(&q * d * q.transpose(), Strictness::Strict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_strict_spd() {
        let m = make_spd(DMatrix::identity(2, 2), Strictness::Strict).unwrap();
        assert!(m.is_strict());
        assert_eq!(m.min_eigenvalue(), 1.0);
    }

    #[test]
    fn indefinite_is_rejected_with_smallest_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match make_spd(m, Strictness::Strict) {
            Err(Error::NotPositiveDefinite { min_eigenvalue }) => {
                assert_relative_eq!(min_eigenvalue, -1.0, epsilon = 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nearly_singular_is_accepted() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.999, 0.999, 1.0]);
        let spd = make_spd(m, Strictness::Strict).unwrap();
        assert_relative_eq!(spd.min_eigenvalue(), 0.001, epsilon = 1e-12);
        assert_relative_eq!(spd.max_eigenvalue(), 1.999, epsilon = 1e-12);
    }

    #[test]
    fn semidefinite_admits_zero_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(make_spd(m.clone(), Strictness::Strict).is_err());
        let spd = make_spd(m, Strictness::Semidefinite).unwrap();
        assert!(!spd.is_strict());
        assert!(spd.log_det().is_err());
    }

    #[test]
    fn shape_errors() {
        assert_eq!(
            make_spd(DMatrix::zeros(2, 3), Strictness::Strict).unwrap_err(),
            Error::NotSquare { rows: 2, cols: 3 }
        );
        assert_eq!(make_spd(DMatrix::zeros(0, 0), Strictness::Strict).unwrap_err(), Error::Empty);
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert_eq!(make_spd(m, Strictness::Strict).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn construction_symmetrizes_exactly() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.1, 2.0]);
        let s = SymmetricMatrix::new(m).unwrap();
        assert_eq!(s.as_matrix()[(0, 1)], s.as_matrix()[(1, 0)]);
        assert_relative_eq!(s.as_matrix()[(0, 1)], 0.2);
    }

    #[test]
    fn log_det_closed_forms() {
        for d in 1..6 {
            assert_eq!(SpdMatrix::identity(d).log_det().unwrap(), 0.0);
        }
        let m = SpdMatrix::from_diagonal(&[2.0, 4.0], Strictness::Strict).unwrap();
        assert_relative_eq!(log_det(&m).unwrap(), 2.0794415416798357, epsilon = 1e-14);
    }

    #[test]
    fn log_det_matches_eigenvalue_sum() {
        let m = random_spd(8, 0.1, 10.0, 3).unwrap();
        let oracle: f64 = SymmetricEigen::new(m.as_matrix().clone())
            .eigenvalues
            .iter()
            .map(|v| v.ln())
            .sum();
        let ld = m.log_det().unwrap();
        assert!((ld - oracle).abs() <= 1e-10 * oracle.abs().max(1.0));
    }

    #[test]
    fn inverse_negates_log_det() {
        for seed in 0..20 {
            let m = random_spd(6, 0.05, 20.0, seed).unwrap();
            let inv = m.inverse().unwrap();
            assert!((inv.log_det().unwrap() + m.log_det().unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn random_spd_forced_spectrum_is_identity() {
        for seed in [0, 1, 99] {
            let m = random_spd(3, 1.0, 1.0, seed).unwrap();
            assert!((m.as_matrix() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        }
    }

    #[test]
    fn random_spd_spectrum_in_range() {
        let m = random_spd(5, 0.1, 10.0, 7).unwrap();
        let eig = SymmetricEigen::new(m.as_matrix().clone()).eigenvalues;
        for v in eig.iter() {
            assert!(*v >= 0.1 - 1e-12 && *v <= 10.0 + 1e-12, "{v}");
        }
    }

    #[test]
    fn random_spd_is_deterministic() {
        let a = random_spd(4, 0.5, 2.0, 11).unwrap();
        let b = random_spd(4, 0.5, 2.0, 11).unwrap();
        assert_eq!(a.as_matrix(), b.as_matrix());
        let c = random_spd(4, 0.5, 2.0, 12).unwrap();
        assert_ne!(a.as_matrix(), c.as_matrix());
    }

    #[test]
    fn random_spd_rejects_bad_range() {
        assert!(matches!(random_spd(3, 0.0, 1.0, 0), Err(Error::InvalidRange { .. })));
        assert!(matches!(random_spd(3, 2.0, 1.0, 0), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn solve_and_quadratic_form() {
        let m = random_spd(4, 0.5, 3.0, 5).unwrap();
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let sol = m.solve_vector(&x).unwrap();
        assert!((m.as_matrix() * &sol - &x).norm() < 1e-12);
        assert_relative_eq!(m.inverse_quadratic_form(&x).unwrap(), x.dot(&sol), epsilon = 1e-12);
    }
}
