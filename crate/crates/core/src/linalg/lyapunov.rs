//! Continuous Lyapunov (`AX + XA = Q`) and discrete Stein (`X = MXMᵀ + Q`)
//! equations.

use nalgebra::DMatrix;

use super::{check_square, SpdMatrix, SymmetricMatrix};
use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-10;
/// Largest dimension solved through the `d² × d²` Kronecker system.
const STEIN_DIRECT_MAX_DIM: usize = 32;
const STEIN_DOUBLING_TOL: f64 = 1e-12;
const STEIN_MAX_DOUBLINGS: usize = 64;

/// Solves `A X + X A = Q` for symmetric `A` strictly positive definite.
///
/// With `A = V Λ Vᵀ`, the equation decouples in the eigenbasis into
/// `X̃_ij = Q̃_ij / (λ_i + λ_j)` where `Q̃ = Vᵀ Q V`.
pub fn solve_continuous_lyapunov(a: &SpdMatrix, q: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if !a.is_strict() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: a.min_eigenvalue(),
        });
    }
    let n = a.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_continuous_lyapunov",
            expected: n,
            found: q.dim(),
        });
    }
    let v = a.eigenvectors();
    let lambda = a.eigenvalues();
    let mut xt = v.transpose() * q.as_matrix() * v;
    for j in 0..n {
        for i in 0..n {
            xt[(i, j)] /= lambda[i] + lambda[j];
        }
    }
    let x = SymmetricMatrix::new(v * xt * v.transpose())?;

    let am = a.as_matrix();
    let residual = (am * x.as_matrix() + x.as_matrix() * am - q.as_matrix()).norm();
    let tolerance = RESIDUAL_TOL * (1.0 + q.frobenius_norm());
    if residual.is_nan() || residual > tolerance {
        return Err(Error::ResidualTooLarge { residual, tolerance });
    }
    Ok(x)
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    check_square(m)?;
    Ok(m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Solves `X = M X Mᵀ + Q`, the stationary covariance of `θ' = Mθ + ξ` with
/// `Cov ξ = Q`. Requires spectral radius of `M` below 1.
///
/// Dimensions up to 32 use the vectorized system `(I − M⊗M) vec X = vec Q`;
/// larger ones use Smith doubling.
pub fn solve_discrete_stein(m: &DMatrix<f64>, q: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    check_square(m)?;
    let n = m.nrows();
    if q.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_discrete_stein",
            expected: n,
            found: q.dim(),
        });
    }
    let radius = spectral_radius(m)?;
    if radius.is_nan() || radius >= 1.0 {
        return Err(Error::SpectralRadiusTooLarge { radius });
    }

    let x = if n <= STEIN_DIRECT_MAX_DIM {
        stein_direct(m, q.as_matrix())?
    } else {
        stein_doubling(m, q.as_matrix())
    };
    let x = SymmetricMatrix::new(x)?;

    let residual = (x.as_matrix() - m * x.as_matrix() * m.transpose() - q.as_matrix()).norm();
    let tolerance = RESIDUAL_TOL * (1.0 + q.frobenius_norm());
    if residual.is_nan() || residual > tolerance {
        return Err(Error::ResidualTooLarge { residual, tolerance });
    }
    Ok(x)
}

fn stein_direct(m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    // Column-major vec: vec(M X Mᵀ) = (M ⊗ M) vec(X).
    let system = DMatrix::identity(n * n, n * n) - m.kronecker(m);
    let rhs = DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::SpectralRadiusTooLarge { radius: 1.0 })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

fn stein_doubling(m: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    // After k rounds X = Σ_{j < 2^k} M^j Q (M^j)ᵀ.
    let mut x = q.clone();
    let mut power = m.clone();
    for _ in 0..STEIN_MAX_DOUBLINGS {
        let increment = &power * &x * power.transpose();
        x += &increment;
        if increment.norm() <= STEIN_DOUBLING_TOL * x.norm() {
            break;
        }
        power = &power * &power;
    }
    x
}
