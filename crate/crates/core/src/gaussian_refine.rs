//! Density-based refinement of leaf micro-clusters.
//!
//! Each micro-cluster large enough to be worth modelling gets a single
//! multivariate Gaussian fitted to its members. Member densities are
//! min-max normalized within the cluster, and members whose normalized
//! density falls below the global threshold `rho` are moved into a new
//! micro-cluster. One pass only; the result never merges clusters.
//!
//! Densities are handled as logarithms: for seven features and a tight
//! cluster the raw density easily under- or overflows, while min-max
//! normalization only needs ratios to the largest density.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::cf_tree::MicroCluster;
use crate::dataio::Dataset;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineParams {
    /// Normalized-density split threshold in `[0, 1]`.
    pub rho: f64,
    /// Clusters with fewer members are never split.
    pub n_min: usize,
    /// Ridge added to the covariance, relative to its mean variance.
    pub epsilon_scale: f64,
}

impl RefineParams {
    pub const DEFAULT_RHO: f64 = 0.1;
    pub const DEFAULT_EPSILON_SCALE: f64 = 1e-6;

    /// Defaults for `dim`-dimensional data: `rho = 0.1`, `n_min = dim + 2`,
    /// `epsilon_scale = 1e-6`.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            rho: Self::DEFAULT_RHO,
            n_min: dim + 2,
            epsilon_scale: Self::DEFAULT_EPSILON_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if self.n_min < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_min must be >= 2, got {}",
                self.n_min
            )));
        }
        if !(self.epsilon_scale.is_finite() && self.epsilon_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_scale must be positive, got {}",
                self.epsilon_scale
            )));
        }
        Ok(())
    }
}

pub fn mean_vector(points: &[&[f64]]) -> Result<Vec<f64>> {
    let (first, rest) = points.split_first().ok_or(Error::TooFewPoints {
        what: "mean",
        needed: 1,
        found: 0,
    })?;
    let mut mu = first.to_vec();
    for p in rest {
        check_dim(mu.len(), p.len())?;
        for (m, v) in mu.iter_mut().zip(*p) {
            *m += v;
        }
    }
    let n = points.len() as f64;
    mu.iter_mut().for_each(|m| *m /= n);
    Ok(mu)
}

/// Maximum-likelihood covariance (divides by `n`; use `n - 1` for the
/// unbiased estimator).
pub fn covariance_matrix(points: &[&[f64]], mu: &[f64]) -> Result<DMatrix<f64>> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            what: "covariance",
            needed: 2,
            found: points.len(),
        });
    }
    let d = mu.len();
    let mut sigma = DMatrix::<f64>::zeros(d, d);
    let mut dev = vec![0.0; d];
    for p in points {
        check_dim(d, p.len())?;
        for (k, (x, m)) in p.iter().zip(mu).enumerate() {
            dev[k] = x - m;
        }
        for i in 0..d {
            for j in 0..=i {
                sigma[(i, j)] += dev[i] * dev[j];
            }
        }
    }
    let n = points.len() as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = sigma[(i, j)] / n;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    Ok(sigma)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A Gaussian with its covariance pre-factored for density evaluation.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl GaussianModel {
    /// Factors `sigma` as given (no regularization).
    pub fn new(mu: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = mu.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: sigma.nrows(),
            });
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { cluster: None })?
            .unpack();
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            mu: DVector::from_vec(mu),
            sigma,
            chol,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Lower-triangular `L` with `L Lᵀ = Σ`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Natural log of the density at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let diff = DVector::from_iterator(x.len(), x.iter().zip(self.mu.iter()).map(|(a, m)| a - m));
        let z = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        let d = self.dim() as f64;
        -0.5 * (d * LN_2PI + self.log_det + z.norm_squared())
    }
}

/// Fits mean and ridge-regularized covariance to at least two points.
pub fn fit_gaussian(points: &[&[f64]], params: &RefineParams) -> Result<GaussianModel> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            what: "Gaussian fit",
            needed: 2,
            found: points.len(),
        });
    }
    let mu = mean_vector(points)?;
    let mut sigma = covariance_matrix(points, &mu)?;
    let d = mu.len();
    let eps = params.epsilon_scale * (sigma.trace() / d as f64).max(1e-12);
    for i in 0..d {
        sigma[(i, i)] += eps;
    }
    GaussianModel::new(mu, sigma)
}

pub fn log_density(x: &[f64], model: &GaussianModel) -> f64 {
    model.log_density(x)
}

/// Min-max normalized densities.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDensities {
    pub values: Vec<f64>,
    /// All inputs were equal; `values` is all ones and carries no ranking.
    pub degenerate: bool,
}

/// Min-max normalizes densities given as logarithms, shifting by the largest
/// log-density before exponentiating.
pub fn normalize_densities(log_f: &[f64]) -> Result<NormalizedDensities> {
    if log_f.is_empty() {
        return Err(Error::TooFewPoints {
            what: "density normalization",
            needed: 1,
            found: 0,
        });
    }
    if let Some(component) = log_f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, component });
    }
    let max = log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = log_f.iter().copied().fold(f64::INFINITY, f64::min);
    if max == min {
        return Ok(NormalizedDensities {
            values: vec![1.0; log_f.len()],
            degenerate: true,
        });
    }
    let r_min = (min - max).exp();
    let values = log_f
        .iter()
        .map(|&l| ((l - max).exp() - r_min) / (1.0 - r_min))
        .collect();
    Ok(NormalizedDensities {
        values,
        degenerate: false,
    })
}

/// Splits one micro-cluster into its high-density core and its members whose
/// normalized density is below `rho`. Returns the input unchanged when it is
/// smaller than `n_min`, when all members share one density, or when either
/// side would be empty.
pub fn split_cluster(mc: &MicroCluster, dataset: &Dataset, params: &RefineParams) -> Result<Vec<MicroCluster>> {
    if mc.cf.n() < params.n_min {
        return Ok(vec![mc.clone()]);
    }
    let points: Vec<&[f64]> = mc.members.iter().map(|&r| dataset.row(r)).collect();
    let model = fit_gaussian(&points, params)?;
    let log_f: Vec<f64> = points.iter().map(|p| model.log_density(p)).collect();
    let normalized = normalize_densities(&log_f)?;
    if normalized.degenerate {
        return Ok(vec![mc.clone()]);
    }

    let (kept, low) = partition_by_density(&mc.members, &normalized.values, params.rho);
    if kept.is_empty() || low.is_empty() {
        return Ok(vec![mc.clone()]);
    }
    let d = dataset.dim();
    Ok(vec![
        MicroCluster::from_members(d, kept, |r| dataset.row(r))?,
        MicroCluster::from_members(d, low, |r| dataset.row(r))?,
    ])
}

/// Splits members into (density >= rho, density < rho), keeping order.
fn partition_by_density(members: &[usize], normalized: &[f64], rho: f64) -> (Vec<usize>, Vec<usize>) {
    let (mut kept, mut low) = (Vec::new(), Vec::new());
    for (&row, &v) in members.iter().zip(normalized) {
        if v < rho {
            low.push(row);
        } else {
            kept.push(row);
        }
    }
    (kept, low)
}

/// One refinement pass over all micro-clusters. Output keeps input order;
/// a split cluster contributes its kept part followed by its low-density
/// part.
pub fn refine(micro_clusters: &[MicroCluster], dataset: &Dataset, params: &RefineParams) -> Result<Vec<MicroCluster>> {
    params.validate()?;
    let parts = micro_clusters
        .par_iter()
        .enumerate()
        .map(|(i, mc)| {
            split_cluster(mc, dataset, params).map_err(|e| match e {
                Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { cluster: Some(i) },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}
