//! Symmetric eigendecomposition of the lag-covariance matrix and choice of the
//! statistical dimension.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::SsaError;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenpairs sorted by non-increasing eigenvalue.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
    /// Non-negative eigenvalues, non-increasing.
    pub values: Vec<f64>,
}

/// Eigendecomposition of a symmetric positive semi-definite matrix.
///
/// Eigenvalues are sorted in non-increasing order and roundoff negatives are
/// clamped to zero. Each eigenvector is oriented so that its first component
/// with magnitude above 1e-12 is positive, which makes trained models
/// reproducible byte-for-byte.
pub fn symmetric_spectrum(matrix: DMatrix<f64>) -> Result<Spectrum, SsaError> {
    if !matrix.is_square() {
        return Err(SsaError::DimensionMismatch {
            expected: matrix.nrows(),
            actual: matrix.ncols(),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(SsaError::NumericalFailure("matrix has non-finite entries".into()));
    }
    let n = matrix.nrows();
    let eig = SymmetricEigen::try_new(matrix, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| SsaError::NumericalFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(src).into_owned();
        if let Some(lead) = v.iter().find(|c| c.abs() > 1e-12) {
            if *lead < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(dst, &v);
        values.push(eig.eigenvalues[src].max(0.0));
    }
    Ok(Spectrum { vectors, values })
}

/// Eigenpairs of `B·Bᵀ` for an explicit trajectory matrix.
pub fn eigendecompose_covariance(b: &DMatrix<f64>) -> Result<Spectrum, SsaError> {
    symmetric_spectrum(b * b.transpose())
}

/// How the statistical dimension `r` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimensionRule {
    /// Use exactly this many leading eigenvectors.
    Explicit(usize),
    /// Smallest `r` whose leading eigenvalues hold at least this share of the
    /// total energy.
    Energy(f64),
}

impl Default for DimensionRule {
    fn default() -> Self {
        DimensionRule::Energy(0.90)
    }
}

/// Resolves `r` from a non-increasing spectrum; the result lies in `[1, L-1]`.
pub fn select_dimension(eigenvalues: &[f64], rule: DimensionRule) -> usize {
    let upper = eigenvalues.len().saturating_sub(1).max(1);
    let r = match rule {
        DimensionRule::Explicit(r) => r,
        DimensionRule::Energy(fraction) => {
            let total: f64 = eigenvalues.iter().sum();
            if total <= 0.0 {
                1
            } else {
                let mut acc = 0.0;
                let mut chosen = eigenvalues.len();
                for (i, e) in eigenvalues.iter().enumerate() {
                    acc += e;
                    if acc / total >= fraction {
                        chosen = i + 1;
                        break;
                    }
                }
                chosen
            }
        }
    };
    r.clamp(1, upper)
}
