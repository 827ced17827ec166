//! Lagged embedding of a byte series.

use nalgebra::{DMatrix, DVector};

use super::SsaError;

fn check_lengths(n: usize, lag: usize) -> Result<usize, SsaError> {
    if lag < 2 {
        return Err(SsaError::InvalidConfig(format!("lag must be at least 2, got {lag}")));
    }
    if n < lag {
        return Err(SsaError::SeriesTooShort {
            needed: 2 * lag - 1,
            available: n,
        });
    }
    let k = n - lag + 1;
    if k < lag {
        return Err(SsaError::SeriesTooShort {
            needed: 2 * lag - 1,
            available: n,
        });
    }
    Ok(k)
}

/// The `L × K` Hankel matrix whose column `i` is `(x_i, …, x_{i+L-1})`.
pub fn build_trajectory_matrix(series: &[f64], lag: usize) -> Result<DMatrix<f64>, SsaError> {
    let k = check_lengths(series.len(), lag)?;
    Ok(DMatrix::from_fn(lag, k, |row, col| series[row + col]))
}

/// `B·Bᵀ` for the trajectory matrix of `series` without materializing `B`.
///
/// Entry `(i, j)` is `Σ_{t<K} x_{i+t}·x_{j+t}`; moving one step down a diagonal
/// drops one product and adds one, so only the first row costs `O(L·K)`. For
/// byte-valued input every partial sum is an integer far below 2^53, so the
/// recurrence is exact.
pub fn lagged_gram(series: &[f64], lag: usize) -> Result<DMatrix<f64>, SsaError> {
    let k = check_lengths(series.len(), lag)?;
    let mut gram = DMatrix::zeros(lag, lag);
    for j in 0..lag {
        let dot: f64 = (0..k).map(|t| series[t] * series[j + t]).sum();
        gram[(0, j)] = dot;
    }
    for i in 1..lag {
        for j in i..lag {
            let prev = gram[(i - 1, j - 1)];
            gram[(i, j)] = prev - series[i - 1] * series[j - 1] + series[i - 1 + k] * series[j - 1 + k];
        }
    }
    for i in 0..lag {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    Ok(gram)
}

/// Sample mean of the `K` lagged vectors.
pub fn lagged_mean(series: &[f64], lag: usize) -> Result<DVector<f64>, SsaError> {
    let k = check_lengths(series.len(), lag)?;
    let mut sum: f64 = series[..k].iter().sum();
    let mut mean = DVector::zeros(lag);
    mean[0] = sum / k as f64;
    for i in 1..lag {
        sum += series[i - 1 + k] - series[i - 1];
        mean[i] = sum / k as f64;
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hankel_columns() {
        let b = build_trajectory_matrix(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3).unwrap();
        assert_eq!(b.shape(), (3, 4));
        for col in 0..4 {
            let expected: Vec<f64> = (0..3).map(|r| (col + r + 1) as f64).collect();
            assert_eq!(b.column(col).iter().copied().collect::<Vec<_>>(), expected);
        }
    }

    #[test]
    fn k_is_n_minus_l_plus_one() {
        let b = build_trajectory_matrix(&[0.0; 5], 3).unwrap();
        assert_eq!(b.ncols(), 3);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            build_trajectory_matrix(&[0.0; 5], 4),
            Err(SsaError::SeriesTooShort { .. })
        ));
        assert!(matches!(
            lagged_gram(&[0.0; 5], 4),
            Err(SsaError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn gram_matches_explicit_product() {
        let series: Vec<f64> = (0..97u32).map(|i| ((i * 37 + 11) % 256) as f64).collect();
        for lag in [2, 5, 17, 48] {
            let b = build_trajectory_matrix(&series, lag).unwrap();
            let explicit = &b * b.transpose();
            assert_eq!(lagged_gram(&series, lag).unwrap(), explicit, "lag {lag}");
            let mean = lagged_mean(&series, lag).unwrap();
            let direct = b.column_mean();
            assert!((mean - direct).amax() < 1e-9);
        }
    }
}
