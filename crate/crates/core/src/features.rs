//! Generalization matrices `Φ_h` mapping `(state, action)` pairs to feature rows.
//!
//! Rows are handed out sparsely as `(feature index, value)` pairs so that the
//! identity and recommendation bases, whose rows have a handful of nonzeros,
//! don't pay for dense `K`-vectors. Periods at or beyond the horizon have an
//! all-zero basis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::environments::RecommendationEnv;
use crate::error::{Error, Result};
use crate::mdp::ValueFunctions;

/// Sparse feature row.
pub type FeatureRow = Vec<(usize, f64)>;

/// Ridge used inside [`normalized_distance`] so rank-deficient bases still solve.
pub const PROJECTION_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone)]
enum Basis {
    /// One `(S·A) × K` matrix per period.
    Dense(Vec<DMatrix<f64>>),
    /// `Φ_h = I`, `K = S·A`.
    Identity { horizon: usize },
    /// Indicator and interaction features `φ_m`, `φ_mn`; `K = N² + N`.
    Recommendation { env: Arc<RecommendationEnv> },
}

/// Per-period feature maps sharing a common dimension `K`.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    num_states: usize,
    num_actions: usize,
    num_features: usize,
    basis: Basis,
}

impl FeatureMap {
    /// Wraps explicit matrices, one per period, each `(S·A) × K`.
    pub fn dense(num_states: usize, num_actions: usize, periods: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = periods
            .first()
            .map(|m| m.ncols())
            .ok_or_else(|| Error::InvalidArgument("feature map needs at least one period".into()))?;
        if periods
            .iter()
            .any(|m| m.nrows() != num_states * num_actions || m.ncols() != k)
        {
            return Err(Error::InvalidArgument("every period must be (S·A) × K".into()));
        }
        Ok(Self {
            num_states,
            num_actions,
            num_features: k,
            basis: Basis::Dense(periods),
        })
    }

    /// Tabular basis.
    pub fn identity(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Self {
            num_states,
            num_actions,
            num_features: num_states * num_actions,
            basis: Basis::Identity { horizon },
        }
    }

    /// Recommendation basis over the states of `env`, identical at every period.
    pub fn recommendation(env: Arc<RecommendationEnv>) -> Self {
        let n = env.num_products();
        Self {
            num_states: env.mdp().num_states(),
            num_actions: n,
            num_features: recommendation_dimension(n),
            basis: Basis::Recommendation { env },
        }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Number of periods with a non-trivial basis.
    pub fn horizon(&self) -> usize {
        match &self.basis {
            Basis::Dense(p) => p.len(),
            Basis::Identity { horizon } => *horizon,
            Basis::Recommendation { env } => env.mdp().horizon(),
        }
    }

    /// Dense period matrix, if this map stores one.
    pub fn period_matrix(&self, period: usize) -> Option<&DMatrix<f64>> {
        match &self.basis {
            Basis::Dense(p) => p.get(period),
            _ => None,
        }
    }

    /// `Φ_h(s, a)` as sparse pairs; empty for `h >= horizon`.
    pub fn row(&self, period: usize, state: usize, action: usize) -> FeatureRow {
        if period >= self.horizon() {
            return Vec::new();
        }
        match &self.basis {
            Basis::Dense(p) => {
                let m = &p[period];
                let r = state * self.num_actions + action;
                (0..self.num_features).map(|k| (k, m[(r, k)])).collect()
            }
            Basis::Identity { .. } => vec![(state * self.num_actions + action, 1.0)],
            Basis::Recommendation { env } => recommendation_row(env.state_vector(state), action),
        }
    }

    /// `(Φ_h θ)(s, a)`.
    pub fn q_value(&self, period: usize, state: usize, action: usize, theta: &[f64]) -> f64 {
        if period >= self.horizon() {
            return 0.0;
        }
        match &self.basis {
            Basis::Dense(p) => {
                let m = &p[period];
                let r = state * self.num_actions + action;
                (0..self.num_features).map(|k| m[(r, k)] * theta[k]).sum()
            }
            Basis::Identity { .. } => theta[state * self.num_actions + action],
            Basis::Recommendation { env } => {
                let n = self.num_actions;
                let x = env.state_vector(state);
                theta[action]
                    + x.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0)
                        .map(|(i, v)| *v as f64 * theta[n + action * n + i])
                        .sum::<f64>()
            }
        }
    }

    /// Estimated Q-values of every action at `(h, s)`.
    pub fn q_row(&self, period: usize, state: usize, theta: &[f64]) -> Vec<f64> {
        (0..self.num_actions)
            .map(|a| self.q_value(period, state, a, theta))
            .collect()
    }

    /// `max_a (Φ_h θ)(s, a)`; 0 beyond the horizon.
    pub fn max_q(&self, period: usize, state: usize, theta: &[f64]) -> f64 {
        if period >= self.horizon() {
            return 0.0;
        }
        (0..self.num_actions)
            .map(|a| self.q_value(period, state, a, theta))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn period_dense(&self, period: usize) -> DMatrix<f64> {
        if let Some(m) = self.period_matrix(period) {
            return m.clone();
        }
        let rows = self.num_states * self.num_actions;
        let mut m = DMatrix::zeros(rows, self.num_features);
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for (k, v) in self.row(period, s, a) {
                    m[(s * self.num_actions + a, k)] = v;
                }
            }
        }
        m
    }
}

/// `K = N² + N`.
pub fn recommendation_dimension(num_products: usize) -> usize {
    num_products * num_products + num_products
}

/// Row of the recommendation basis for preference vector `x` and product `a`:
/// `φ_a = 1` at index `a`, `φ_an = x_n` at index `N + a·N + n`.
pub fn recommendation_row(x: &[i8], action: usize) -> FeatureRow {
    let n = x.len();
    let mut row = Vec::with_capacity(1 + n);
    row.push((action, 1.0));
    for (i, &v) in x.iter().enumerate() {
        if v != 0 {
            row.push((n + action * n + i, v as f64));
        }
    }
    row
}

fn check_vf(q_star: &ValueFunctions) -> Result<usize> {
    let horizon = q_star.horizon();
    if horizon == 0 {
        return Err(Error::InvalidArgument("value functions have no periods".into()));
    }
    Ok(q_star.q_star[0].len())
}

/// Column 1 is `Q*_h`, column 2 is all ones, the remaining `K - 2` columns are
/// i.i.d. standard Gaussian, drawn afresh for every period.
pub fn coherent_basis<R: Rng + ?Sized>(
    q_star: &ValueFunctions,
    num_features: usize,
    rng: &mut R,
) -> Result<FeatureMap> {
    if num_features < 2 {
        return Err(Error::InvalidArgument(format!(
            "coherent basis needs K >= 2, got {num_features}"
        )));
    }
    let rows = check_vf(q_star)?;
    let periods = q_star
        .q_star
        .iter()
        .map(|q| {
            let mut m = DMatrix::zeros(rows, num_features);
            m.set_column(0, &DVector::from_column_slice(q));
            m.column_mut(1).fill(1.0);
            for k in 2..num_features {
                for r in 0..rows {
                    m[(r, k)] = StandardNormal.sample(rng);
                }
            }
            m
        })
        .collect();
    let a = q_star.num_actions();
    FeatureMap::dense(rows / a, a, periods)
}

/// Column 1 is all ones; columns `2..=K` are `Q*_h + ρ ψ` with `ψ ~ N(0, I)`.
pub fn agnostic_basis<R: Rng + ?Sized>(
    q_star: &ValueFunctions,
    num_features: usize,
    rho: f64,
    rng: &mut R,
) -> Result<FeatureMap> {
    if num_features < 1 {
        return Err(Error::InvalidArgument("agnostic basis needs K >= 1".into()));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be finite and >= 0, got {rho}")));
    }
    let rows = check_vf(q_star)?;
    let periods = q_star
        .q_star
        .iter()
        .map(|q| {
            let mut m = DMatrix::zeros(rows, num_features);
            m.column_mut(0).fill(1.0);
            for k in 1..num_features {
                for r in 0..rows {
                    let psi: f64 = StandardNormal.sample(rng);
                    m[(r, k)] = q[r] + rho * psi;
                }
            }
            m
        })
        .collect();
    let a = q_star.num_actions();
    FeatureMap::dense(rows / a, a, periods)
}

/// Squared distance from `target` to the column span of `basis`. Uses a
/// plain QR solve when `basis` is numerically full rank and falls back to
/// the ridge-augmented system otherwise.
pub fn projection_residual(basis: &DMatrix<f64>, target: &DVector<f64>) -> f64 {
    let (m, k) = basis.shape();
    if m >= k {
        let qr = basis.clone().qr();
        let r = qr.r();
        let diag = r.diagonal().map(f64::abs);
        if diag.min() > 1e-12 * diag.max().max(f64::MIN_POSITIVE) {
            let qtb = qr.q().transpose() * target;
            if let Some(theta) = r.solve_upper_triangular(&qtb) {
                return (target - basis * theta).norm_squared();
            }
        }
    }
    let mut stacked = DMatrix::zeros(m + k, k);
    stacked.view_mut((0, 0), (m, k)).copy_from(basis);
    let root = PROJECTION_RIDGE.sqrt();
    for i in 0..k {
        stacked[(m + i, i)] = root;
    }
    let mut rhs = DVector::zeros(m + k);
    rhs.rows_mut(0, m).copy_from(target);
    let qr = stacked.qr();
    let qtb = qr.q().transpose() * rhs;
    let theta = qr
        .r()
        .solve_upper_triangular(&qtb)
        .unwrap_or_else(|| DVector::zeros(k));
    (target - basis * theta).norm_squared()
}

/// `sqrt(Σ_h min_θ ‖Q*_h − Φ_h θ‖²) / sqrt(Σ_h ‖Q*_h‖²)` for one feature map.
pub fn normalized_distance(q_star: &ValueFunctions, fmap: &FeatureMap) -> Result<f64> {
    let horizon = q_star.horizon();
    if fmap.horizon() < horizon {
        return Err(Error::PeriodMismatch { features: fmap.horizon(), needed: horizon });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for h in 0..horizon {
        let q = DVector::from_column_slice(&q_star.q_star[h]);
        den += q.norm_squared();
        num += projection_residual(&fmap.period_dense(h), &q);
    }
    if den == 0.0 {
        return Err(Error::ZeroValueFunction);
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{make_chain, make_recommendation};
    use crate::mdp::solve_optimal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coherent_contains_q_star() {
        let vf = solve_optimal(&make_chain(10).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in [2, 5, 20] {
            let fmap = coherent_basis(&vf, k, &mut rng).unwrap();
            for h in 0..10 {
                let q = DVector::from_column_slice(&vf.q_star[h]);
                let res = projection_residual(fmap.period_matrix(h).unwrap(), &q);
                assert!(res.sqrt() < 1e-10, "k={k} h={h} residual {res}");
            }
            assert!(normalized_distance(&vf, &fmap).unwrap() < 1e-8);
        }
    }

    #[test]
    fn coherent_two_columns_are_deterministic() {
        let vf = solve_optimal(&make_chain(6).unwrap());
        let a = coherent_basis(&vf, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = coherent_basis(&vf, 2, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for h in 0..6 {
            assert_eq!(a.period_matrix(h), b.period_matrix(h));
        }
        assert!(coherent_basis(&vf, 1, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn full_scale_chain_basis_shape() {
        let vf = solve_optimal(&make_chain(50).unwrap());
        let fmap = coherent_basis(&vf, 20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(fmap.horizon(), 50);
        assert_eq!(fmap.period_matrix(0).unwrap().shape(), (100, 20));
    }

    #[test]
    fn agnostic_distance() {
        let vf = solve_optimal(&make_chain(8).unwrap());
        let zero = agnostic_basis(&vf, 11, 0.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(normalized_distance(&vf, &zero).unwrap() < 1e-8);
        let noisy = agnostic_basis(&vf, 11, 0.1, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(noisy.period_matrix(0).unwrap().shape(), (16, 11));
        assert!(normalized_distance(&vf, &noisy).unwrap() > 0.0);
        let again = agnostic_basis(&vf, 11, 0.1, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(noisy.period_matrix(3), again.period_matrix(3));
    }

    #[test]
    fn orthogonal_basis_has_unit_distance() {
        // Q* = (1, 0) with a single basis column (0, 1)
        let vf = ValueFunctions::new(2, vec![vec![1.0, 0.0]], vec![vec![1.0], vec![0.0]]);
        let fmap = FeatureMap::dense(1, 2, vec![DMatrix::from_row_slice(2, 1, &[0.0, 1.0])]).unwrap();
        assert!((normalized_distance(&vf, &fmap).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_q_star_is_undefined() {
        let vf = solve_optimal(&make_chain(3).unwrap());
        let zero = ValueFunctions::new(2, vec![vec![0.0; 6]; 3], vf.v_star.clone());
        let fmap = FeatureMap::identity(3, 2, 3);
        assert!(matches!(normalized_distance(&zero, &fmap), Err(Error::ZeroValueFunction)));
    }

    #[test]
    fn recommendation_rows() {
        assert_eq!(recommendation_dimension(10), 110);
        assert_eq!(recommendation_row(&[0, 0, 0], 2), vec![(2, 1.0)]);
        // N=2, x=(+1,-1), a is the first product (index 0)
        let row = recommendation_row(&[1, -1], 0);
        assert_eq!(row, vec![(0, 1.0), (2, 1.0), (3, -1.0)]);

        let env = Arc::new(make_recommendation(3, 2, &[0.0; 9], &[0.0; 3]).unwrap());
        let fmap = FeatureMap::recommendation(env.clone());
        assert_eq!(fmap.num_features(), 12);
        let s = env.state_index(&[1, 0, -1]).unwrap();
        assert_eq!(fmap.row(1, s, 1), recommendation_row(&[1, 0, -1], 1));
        assert!(fmap.row(2, s, 1).is_empty());
        let theta: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let dense: f64 = fmap.row(0, s, 1).iter().map(|(k, v)| v * theta[*k]).sum();
        assert_eq!(fmap.q_value(0, s, 1, &theta), dense);
    }
}
