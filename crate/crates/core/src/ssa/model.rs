use nalgebra::{DMatrix, DVector};

use super::eigen::{select_dimension, symmetric_spectrum, DimensionRule};
use super::embed::{lagged_gram, lagged_mean};
use super::SsaError;

/// Training length, lag and the rule for the statistical dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagConfig {
    /// Number of leading bytes used for training (`N`).
    pub train_len: usize,
    /// Window length of the lagged vectors (`L`).
    pub lag: usize,
    pub dimension: DimensionRule,
}

impl LagConfig {
    pub fn new(train_len: usize, lag: usize, dimension: DimensionRule) -> Result<Self, SsaError> {
        let config = LagConfig {
            train_len,
            lag,
            dimension,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SsaError> {
        let invalid = |msg: String| Err(SsaError::InvalidConfig(msg));
        if self.lag < 2 {
            return invalid(format!("lag must be at least 2, got {}", self.lag));
        }
        if self.lag > self.train_len / 2 {
            return invalid(format!(
                "lag {} exceeds half the training length {}",
                self.lag, self.train_len
            ));
        }
        match self.dimension {
            DimensionRule::Explicit(r) if r == 0 || r >= self.lag => {
                invalid(format!("dimension r = {r} must satisfy 1 <= r < L = {}", self.lag))
            }
            DimensionRule::Energy(f) if !(f > 0.0 && f <= 1.0) => {
                invalid(format!("energy fraction {f} must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }

    /// Number of lagged training vectors, `K = N - L + 1`.
    pub fn num_vectors(&self) -> usize {
        self.train_len - self.lag + 1
    }
}

/// A trained detector: signal subspace, eigenvalue weights and centroid.
///
/// Immutable once built; share it behind an `Arc` to run several detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SsaModel {
    config: LagConfig,
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    centroid: DVector<f64>,
    total_energy: f64,
    training_score_max: f64,
    // Basis rows and centroid split as `hi + lo`, `hi` on the grid 2^-bits.
    // For byte windows every `hi` product and partial sum is exact in f64,
    // so `c̃_i − u_iᵀb` comes out within about an ulp however close the
    // window sits to the centroid. Rows are stored row-major, `r × L`.
    basis_hi: Vec<f64>,
    basis_lo: Vec<f64>,
    centroid_hi: Vec<f64>,
    centroid_lo: Vec<f64>,
}

fn eigen_weights(eigenvalues: &[f64]) -> Vec<f64> {
    let sum: f64 = eigenvalues.iter().sum();
    if sum > 0.0 {
        eigenvalues.iter().map(|e| e / sum).collect()
    } else {
        vec![1.0 / eigenvalues.len() as f64; eigenvalues.len()]
    }
}

/// Grid exponent keeping `Σ|u_j·b_j|` and `|c̃|` for byte windows below
/// 2^52 grid units, so sums of grid values never round.
fn grid_bits(lag: usize) -> i32 {
    let span = (255.0 * lag as f64).log2().ceil() as i32;
    (52 - span).clamp(0, 52)
}

/// `(hi, lo)` with `hi` a multiple of 2^-bits and `hi + lo == v` exactly.
fn split(v: f64, bits: i32) -> (f64, f64) {
    let scale = 2f64.powi(bits);
    let hi = (v * scale).round() / scale;
    (hi, v - hi)
}

/// `(Σ hi_j·b_j, Σ lo_j·b_j)` with a fixed four-lane summation order.
#[inline]
fn split_dot(hi: &[f64], lo: &[f64], b: &[f64]) -> (f64, f64) {
    debug_assert!(hi.len() == b.len() && lo.len() == b.len());
    let mut acc_hi = [0.0f64; 4];
    let mut acc_lo = [0.0f64; 4];
    let (h4, l4, b4) = (hi.chunks_exact(4), lo.chunks_exact(4), b.chunks_exact(4));
    let (mut tail_hi, mut tail_lo) = (0.0, 0.0);
    for ((h, l), x) in h4.remainder().iter().zip(l4.remainder()).zip(b4.remainder()) {
        tail_hi += h * x;
        tail_lo += l * x;
    }
    for ((h, l), x) in h4.zip(l4).zip(b4) {
        for k in 0..4 {
            acc_hi[k] += h[k] * x[k];
            acc_lo[k] += l[k] * x[k];
        }
    }
    (
        (acc_hi[0] + acc_hi[1]) + (acc_hi[2] + acc_hi[3]) + tail_hi,
        (acc_lo[0] + acc_lo[1]) + (acc_lo[2] + acc_lo[3]) + tail_lo,
    )
}

impl SsaModel {
    /// Assembles a model from stored parts, recomputing the derived weights.
    pub fn from_parts(
        config: LagConfig,
        basis: DMatrix<f64>,
        eigenvalues: Vec<f64>,
        centroid: DVector<f64>,
        total_energy: f64,
        training_score_max: f64,
    ) -> Result<Self, SsaError> {
        let rank = eigenvalues.len();
        if basis.nrows() != config.lag {
            return Err(SsaError::DimensionMismatch {
                expected: config.lag,
                actual: basis.nrows(),
            });
        }
        if basis.ncols() != rank || rank == 0 {
            return Err(SsaError::DimensionMismatch {
                expected: rank,
                actual: basis.ncols(),
            });
        }
        if centroid.len() != rank {
            return Err(SsaError::DimensionMismatch {
                expected: rank,
                actual: centroid.len(),
            });
        }
        let weights = eigen_weights(&eigenvalues);
        let bits = grid_bits(config.lag);
        let (mut basis_hi, mut basis_lo) = (Vec::with_capacity(basis.len()), Vec::with_capacity(basis.len()));
        for i in 0..rank {
            for &u in basis.column(i).iter() {
                let (h, l) = split(u, bits);
                basis_hi.push(h);
                basis_lo.push(l);
            }
        }
        let (centroid_hi, centroid_lo) = centroid.iter().map(|&c| split(c, bits)).unzip();
        Ok(SsaModel {
            config,
            basis,
            eigenvalues,
            weights,
            centroid,
            total_energy,
            training_score_max,
            basis_hi,
            basis_lo,
            centroid_hi,
            centroid_lo,
        })
    }

    pub fn config(&self) -> &LagConfig {
        &self.config
    }

    pub fn lag(&self) -> usize {
        self.config.lag
    }

    /// Resolved statistical dimension `r`.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `L × r` matrix of the leading eigenvectors.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Projected centroid `c̃ = Uᵀc`.
    pub fn centroid(&self) -> &DVector<f64> {
        &self.centroid
    }

    /// Sum of all `L` eigenvalues of `B·Bᵀ`.
    pub fn total_energy(&self) -> f64 {
        self.total_energy
    }

    /// Share of the total energy carried by the leading eigenvector.
    pub fn leading_share(&self) -> f64 {
        if self.total_energy > 0.0 {
            self.eigenvalues[0] / self.total_energy
        } else {
            0.0
        }
    }

    /// Largest weighted score over the training vectors.
    pub fn training_score_max(&self) -> f64 {
        self.training_score_max
    }

    fn check_len(&self, b: &[f64]) -> Result<(), SsaError> {
        if b.len() != self.config.lag {
            return Err(SsaError::DimensionMismatch {
                expected: self.config.lag,
                actual: b.len(),
            });
        }
        Ok(())
    }

    /// Departures `c̃_i − u_iᵀb`, one per basis vector.
    #[inline]
    fn departures<'a>(&'a self, b: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let lag = self.config.lag;
        self.basis_hi
            .chunks_exact(lag)
            .zip(self.basis_lo.chunks_exact(lag))
            .zip(self.centroid_hi.iter().zip(&self.centroid_lo))
            .map(move |((hi, lo), (c_hi, c_lo))| {
                let (s_hi, s_lo) = split_dot(hi, lo, b);
                (c_hi - s_hi) + (c_lo - s_lo)
            })
    }

    /// Unweighted departure score `‖c̃ − Uᵀb‖²`.
    pub fn raw_score(&self, b: &[f64]) -> Result<f64, SsaError> {
        self.check_len(b)?;
        Ok(self.departures(b).map(|d| d * d).sum())
    }

    /// Weighted departure score `‖W(c̃ − Uᵀb)‖² = Σ w_i²·(c̃_i − u_iᵀb)²`.
    pub fn weighted_score(&self, b: &[f64]) -> Result<f64, SsaError> {
        self.check_len(b)?;
        Ok(self.score_window(b))
    }

    /// Weighted score without the length check; every scoring path, batch
    /// and streaming, goes through here.
    #[inline]
    pub(crate) fn score_window(&self, window: &[f64]) -> f64 {
        self.departures(window)
            .zip(&self.weights)
            .map(|(d, w)| {
                let wd = w * d;
                wd * wd
            })
            .sum()
    }
}

/// Learns the signal subspace from the first `N` bytes of `series`.
pub fn train(series: &[u8], config: LagConfig) -> Result<SsaModel, SsaError> {
    config.validate()?;
    let n = config.train_len;
    if series.len() < n {
        return Err(SsaError::SeriesTooShort {
            needed: n,
            available: series.len(),
        });
    }
    let x: Vec<f64> = series[..n].iter().map(|&b| f64::from(b)).collect();
    let lag = config.lag;

    let spectrum = symmetric_spectrum(lagged_gram(&x, lag)?)?;
    let rank = select_dimension(&spectrum.values, config.dimension);
    let basis = spectrum.vectors.columns(0, rank).into_owned();
    let eigenvalues = spectrum.values[..rank].to_vec();
    let total_energy = spectrum.values.iter().sum();
    let mean = lagged_mean(&x, lag)?;
    let centroid = basis.tr_mul(&mean);

    let mut model = SsaModel::from_parts(config, basis, eigenvalues, centroid, total_energy, 0.0)?;
    model.training_score_max = x.windows(lag).map(|w| model.score_window(w)).fold(0.0, f64::max);
    Ok(model)
}
