//! Regularized least squares and Gaussian posterior sampling.
//!
//! Everything funnels through the precision matrix
//! `P = (1/σ²) AᵀA + λI`: its Cholesky factor yields the posterior mean
//! `(1/σ²) P⁻¹ Aᵀb` and the covariance `P⁻¹` by triangular solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Initial jitter is `JITTER_SCALE * trace / K`, escalated 10x per retry.
const JITTER_SCALE: f64 = 1e-10;
const JITTER_RETRIES: usize = 3;

/// Design matrix `A` (n × K) and targets `b` (n).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    design: DMatrix<f64>,
    targets: DVector<f64>,
}

impl RegressionData {
    pub fn new(design: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        if design.nrows() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "design has {} rows but {} targets",
                design.nrows(),
                targets.len()
            )));
        }
        if design.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { design, targets })
    }

    /// No observations with `K` features.
    pub fn empty(num_features: usize) -> Self {
        Self {
            design: DMatrix::zeros(0, num_features),
            targets: DVector::zeros(0),
        }
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn num_features(&self) -> usize {
        self.design.ncols()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Sufficient statistics `AᵀA` and `Aᵀb`, accumulated row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
}

impl NormalEquations {
    pub fn zeros(num_features: usize) -> Self {
        Self {
            gram: DMatrix::zeros(num_features, num_features),
            moment: DVector::zeros(num_features),
        }
    }

    pub fn from_data(data: &RegressionData) -> Self {
        let mut eq = Self::zeros(data.num_features());
        for (i, row) in data.design.row_iter().enumerate() {
            let sparse: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| (k, *v))
                .collect();
            eq.add_gram_row(&sparse);
            eq.add_moment(&sparse, data.targets[i]);
        }
        eq
    }

    /// `AᵀA += rowᵀ row`.
    pub fn add_gram_row(&mut self, row: &[(usize, f64)]) {
        for &(i, vi) in row {
            for &(j, vj) in row {
                self.gram[(i, j)] += vi * vj;
            }
        }
    }

    /// `Aᵀb += target · rowᵀ`.
    pub fn add_moment(&mut self, row: &[(usize, f64)], target: f64) {
        for &(i, v) in row {
            self.moment[i] += v * target;
        }
    }
}

/// `N(mean, covariance)` over coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianPosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Cholesky factorization, retrying with diagonal jitter on failure.
pub fn cholesky_with_jitter(matrix: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(matrix.clone()) {
        return Ok(c);
    }
    let k = matrix.nrows().max(1) as f64;
    let scale = (matrix.trace().abs() / k).max(f64::MIN_POSITIVE);
    let mut jitter = JITTER_SCALE * scale;
    for _ in 0..JITTER_RETRIES {
        let mut shifted = matrix.clone();
        for i in 0..matrix.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::Factorization)
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {value}")))
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Posterior from accumulated normal equations.
pub fn posterior_from_normal_equations(
    eq: &NormalEquations,
    sigma: f64,
    lambda: f64,
) -> Result<GaussianPosterior> {
    check_positive("sigma", sigma)?;
    check_positive("lambda", lambda)?;
    let inv_var = 1.0 / (sigma * sigma);
    let mut precision = &eq.gram * inv_var;
    for i in 0..precision.nrows() {
        precision[(i, i)] += lambda;
    }
    posterior_from_precision(&precision, &(&eq.moment * inv_var))
}

/// One draw from the ridge posterior without forming the covariance:
/// with `P = L Lᵀ`, returns `P⁻¹y + L⁻ᵀz`.
pub fn sample_from_normal_equations<R: Rng + ?Sized>(
    eq: &NormalEquations,
    sigma: f64,
    lambda: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    check_positive("sigma", sigma)?;
    check_positive("lambda", lambda)?;
    let inv_var = 1.0 / (sigma * sigma);
    let mut precision = &eq.gram * inv_var;
    for i in 0..precision.nrows() {
        precision[(i, i)] += lambda;
    }
    let y = &eq.moment * inv_var;
    if precision.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let chol = cholesky_with_jitter(&precision)?;
    let mean = chol.solve(&y);
    let z = standard_normal_vector(mean.len(), rng);
    let noise = chol.l().tr_solve_lower_triangular(&z).ok_or(Error::Factorization)?;
    Ok(mean + noise)
}

/// `mean = P⁻¹ y`, `covariance = P⁻¹`.
pub fn posterior_from_precision(
    precision: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<GaussianPosterior> {
    if precision.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let chol = cholesky_with_jitter(precision)?;
    let mean = chol.solve(y);
    let mut covariance = chol.inverse();
    symmetrize(&mut covariance);
    Ok(GaussianPosterior { mean, covariance })
}

/// Mean `(1/σ²)((1/σ²)AᵀA + λI)⁻¹Aᵀb`, covariance `((1/σ²)AᵀA + λI)⁻¹`.
pub fn ridge_posterior(data: &RegressionData, sigma: f64, lambda: f64) -> Result<GaussianPosterior> {
    posterior_from_normal_equations(&NormalEquations::from_data(data), sigma, lambda)
}

/// Point estimate `(AᵀA + λI)⁻¹Aᵀb`.
pub fn plain_ridge(data: &RegressionData, lambda: f64) -> Result<DVector<f64>> {
    plain_ridge_from_normal_equations(&NormalEquations::from_data(data), lambda)
}

pub fn plain_ridge_from_normal_equations(eq: &NormalEquations, lambda: f64) -> Result<DVector<f64>> {
    check_positive("lambda", lambda)?;
    let mut system = eq.gram.clone();
    for i in 0..system.nrows() {
        system[(i, i)] += lambda;
    }
    if system.iter().chain(eq.moment.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(cholesky_with_jitter(&system)?.solve(&eq.moment))
}

/// `mean + L z` with `L` the lower Cholesky factor of the covariance.
pub fn sample_posterior<R: Rng + ?Sized>(post: &GaussianPosterior, rng: &mut R) -> Result<DVector<f64>> {
    let chol = cholesky_with_jitter(&post.covariance)?;
    let z = standard_normal_vector(post.dim(), rng);
    Ok(&post.mean + chol.l() * z)
}

pub fn standard_normal_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(rng)))
}

/// Precision matrix and moment vector maintained by the recursions
/// `P ← (1−ν)P + (1/σ²)φᵀφ` and `y ← (1−ν)y + (1/σ²)·target·φᵀ`,
/// started from `P = λI`, `y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionTracker {
    precision: DMatrix<f64>,
    moment: DVector<f64>,
}

impl PrecisionTracker {
    pub fn new(num_features: usize, lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(Self {
            precision: DMatrix::identity(num_features, num_features) * lambda,
            moment: DVector::zeros(num_features),
        })
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    /// One step of the recursion. `decay` is `ν ∈ [0, 1]`.
    pub fn rank_one_update(&mut self, row: &[(usize, f64)], target: f64, sigma: f64, decay: f64) {
        debug_assert!((0.0..=1.0).contains(&decay));
        let keep = 1.0 - decay;
        let inv_var = 1.0 / (sigma * sigma);
        if keep != 1.0 {
            self.precision *= keep;
            self.moment *= keep;
        }
        for &(i, vi) in row {
            self.moment[i] += inv_var * target * vi;
            for &(j, vj) in row {
                self.precision[(i, j)] += inv_var * vi * vj;
            }
        }
    }

    /// Current `(θ̄ = Σ y, Σ = P⁻¹)`.
    pub fn posterior(&self) -> Result<GaussianPosterior> {
        posterior_from_precision(&self.precision, &self.moment)
    }
}
