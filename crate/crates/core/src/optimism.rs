//! Numerical falsification checks for stochastic optimism: Monte-Carlo
//! comparison of `E[max(x, z)]`, the Gaussian-versus-Dirichlet pair, the
//! Dirichlet-to-Beta projection, single-crossing of Gaussian and Beta CDFs,
//! and two Gaussian tail inequalities.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sampling::{sample_dirichlet, MeanEstimate};

/// A scalar generator driven by an external RNG.
pub type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// Candidate optimistic variable `x` and reference variable `y`.
#[derive(Clone)]
pub struct OptimismPair {
    pub x: Sampler,
    pub y: Sampler,
    pub description: String,
}

impl fmt::Debug for OptimismPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OptimismPair").field("description", &self.description).finish()
    }
}

impl OptimismPair {
    pub fn new(
        x: impl Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
        y: impl Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
        description: impl Into<String>,
    ) -> Self {
        Self { x: Arc::new(x), y: Arc::new(y), description: description.into() }
    }

    /// Replaces `x` by `y + w` with independent `w ~ N(0, sd²)`.
    pub fn with_noise(&self, sd: f64) -> Self {
        let y = self.y.clone();
        let noisy = self.y.clone();
        let normal = Normal::new(0.0, sd).expect("finite noise scale");
        Self {
            x: Arc::new(move |rng| noisy(rng) + normal.sample(rng)),
            y,
            description: format!("{} + N(0, {sd}^2)", self.description),
        }
    }
}

/// Comparison laws for `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZLaw {
    StandardNormal,
    UnitUniform,
    /// `low` with probability `p_low`, otherwise `high`.
    TwoPoint { low: f64, high: f64, p_low: f64 },
}

impl ZLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ZLaw::StandardNormal => rng.sample(rand_distr::StandardNormal),
            ZLaw::UnitUniform => rng.random(),
            ZLaw::TwoPoint { low, high, p_low } => {
                if rng.random::<f64>() < p_low {
                    low
                } else {
                    high
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ZLaw::StandardNormal => "normal".into(),
            ZLaw::UnitUniform => "uniform".into(),
            ZLaw::TwoPoint { low, high, p_low } => format!("two-point({low},{high};{p_low})"),
        }
    }
}

/// Monte-Carlo estimate of `E[max(x, z)] − E[max(y, z')]` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimismEstimate {
    pub delta: f64,
    pub std_error: f64,
}

impl OptimismEstimate {
    /// `Δ̂ ≥ −3·SE`.
    pub fn passes(&self) -> bool {
        self.delta >= -3.0 * self.std_error
    }
}

pub const MIN_OPTIMISM_SAMPLES: usize = 10_000;

/// Paired estimate with independent `z` draws for each side.
pub fn check_optimism<R: RngCore>(
    pair: &OptimismPair,
    z: ZLaw,
    n_mc: usize,
    rng: &mut R,
) -> Result<OptimismEstimate> {
    if n_mc < MIN_OPTIMISM_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_OPTIMISM_SAMPLES} samples, got {n_mc}"
        )));
    }
    let mut acc = MeanEstimate::default();
    for _ in 0..n_mc {
        let x = (pair.x)(rng);
        let zx = z.sample(rng);
        let y = (pair.y)(rng);
        let zy = z.sample(rng);
        acc.push(x.max(zx) - y.max(zy));
    }
    Ok(OptimismEstimate { delta: acc.mean(), std_error: acc.std_error() })
}

/// Values `v ∈ [0,1]^N` and concentrations `α ∈ [1,∞)^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpec {
    values: Vec<f64>,
    concentration: Vec<f64>,
}

impl DirichletSpec {
    pub fn new(values: Vec<f64>, concentration: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != concentration.len() {
            return Err(Error::InvalidArgument("values and concentration must be nonempty and equal length".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("values must lie in [0, 1]".into()));
        }
        if concentration.iter().any(|a| !(a.is_finite() && *a >= 1.0)) {
            return Err(Error::InvalidArgument("concentrations must be finite and >= 1".into()));
        }
        Ok(Self { values, concentration })
    }

    /// Sorted uniform values and concentrations `1 + Exp`-like draws in `[1, 1 + max_extra]`.
    pub fn random<R: Rng + ?Sized>(dim: usize, max_extra: f64, rng: &mut R) -> Result<Self> {
        let mut values: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
        values.sort_by(f64::total_cmp);
        let concentration = (0..dim).map(|_| 1.0 + max_extra * rng.random::<f64>()).collect();
        Self::new(values, concentration)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn total(&self) -> f64 {
        self.concentration.iter().sum()
    }

    /// `αᵀv / αᵀ1`.
    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.concentration).map(|(v, a)| v * a).sum::<f64>() / self.total()
    }
}

/// `x ~ N(αᵀv/αᵀ1, 1/αᵀ1)` and `y = pᵀv` with `p ~ Dirichlet(α)`.
pub fn gaussian_dirichlet_pair(spec: &DirichletSpec) -> OptimismPair {
    let normal = Normal::new(spec.mean(), spec.total().recip().sqrt()).expect("positive variance");
    let values = spec.values.clone();
    let alpha = spec.concentration.clone();
    OptimismPair::new(
        move |rng| normal.sample(rng),
        move |rng| {
            let p = sample_dirichlet(&alpha, rng);
            p.iter().zip(&values).map(|(p, v)| p * v).sum()
        },
        format!("gauss-vs-dirichlet v={:?} alpha={:?}", spec.values, spec.concentration),
    )
}

/// `α̃ = Σα_i(v_i − v_1)/(v_d − v_1)`, `β̃ = Σα_i(v_d − v_i)/(v_d − v_1)`.
/// Values must be sorted ascending with `v_d > v_1`.
pub fn beta_projection(spec: &DirichletSpec) -> Result<(f64, f64)> {
    let v = &spec.values;
    if v.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("values must be sorted ascending".into()));
    }
    let (lo, hi) = (v[0], v[v.len() - 1]);
    if hi <= lo {
        return Err(Error::InvalidArgument("degenerate value vector: v_d = v_1".into()));
    }
    let span = hi - lo;
    let mut a = 0.0;
    let mut b = 0.0;
    for (vi, ai) in v.iter().zip(&spec.concentration) {
        a += ai * (vi - lo) / span;
        b += ai * (hi - vi) / span;
    }
    Ok((a, b))
}

/// `ỹ = p̃·v_d + (1 − p̃)·v_1` with `p̃ ~ Beta(α̃, β̃)`.
pub fn projected_sampler(spec: &DirichletSpec) -> Result<Sampler> {
    let (a, b) = beta_projection(spec)?;
    let beta = rand_distr::Beta::new(a, b)
        .map_err(|e| Error::InvalidArgument(format!("beta projection: {e}")))?;
    let lo = spec.values[0];
    let hi = spec.values[spec.values.len() - 1];
    Ok(Arc::new(move |rng| {
        let p = beta.sample(rng);
        p * hi + (1.0 - p) * lo
    }))
}

/// `Φ(z)`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `φ(z)`.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

const SIMPSON_RTOL: f64 = 1e-10;
const SIMPSON_MAX_DEPTH: u32 = 48;

fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson_step(f, a, fa, m, fm);
    let (rm, frm, right) = simpson_step(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1)
        + simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1)
}

/// Adaptive Simpson quadrature to absolute tolerance `eps`.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson_step(f, a, fa, b, fb);
    simpson_rec(f, a, fa, b, fb, m, fm, whole, eps, SIMPSON_MAX_DEPTH)
}

// ∫_0^x t^{a−1}(1−t)^{b−1} dt for x ≤ 1/2, written as
// (1/a)∫_0^{x^a} (1 − u^{1/a})^{b−1} du so the integrand stays bounded.
struct LowerBeta {
    a: f64,
    b: f64,
}

impl LowerBeta {
    fn integrand(&self) -> impl Fn(f64) -> f64 + '_ {
        move |u: f64| (1.0 - u.powf(1.0 / self.a)).powf(self.b - 1.0)
    }

    fn between(&self, x0: f64, x1: f64, eps: f64) -> f64 {
        let f = self.integrand();
        integrate(&f, x0.powf(self.a), x1.powf(self.a), eps * self.a) / self.a
    }
}

/// Regularized incomplete Beta function `I_x(a, b)` on an ascending grid
/// inside `[0, 1]`, accumulated segment by segment. Points above 1/2 use
/// `I_x(a, b) = 1 − I_{1−x}(b, a)`.
pub fn beta_cdf_grid(xs: &[f64], a: f64, b: f64) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("Beta parameters must be positive, got ({a}, {b})")));
    }
    if xs.windows(2).any(|w| w[0] > w[1]) || xs.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidArgument("grid must be ascending inside [0, 1]".into()));
    }
    let left = LowerBeta { a, b };
    let right = LowerBeta { a: b, b: a };
    let rough = left.between(0.0, 0.5, 1e-6) + right.between(0.0, 0.5, 1e-6);
    let eps = SIMPSON_RTOL * rough * 1e-2;
    let total = left.between(0.0, 0.5, eps) + right.between(0.0, 0.5, eps);
    let tol = eps / (xs.len() as f64 + 1.0);

    let mut out = vec![0.0; xs.len()];
    let split = xs.partition_point(|&x| x <= 0.5);
    let (mut acc, mut prev) = (0.0, 0.0);
    for i in 0..split {
        acc += left.between(prev, xs[i], tol);
        prev = xs[i];
        out[i] = acc / total;
    }
    let (mut acc, mut prev) = (0.0, 0.0);
    for i in (split..xs.len()).rev() {
        let y = 1.0 - xs[i];
        acc += right.between(prev, y, tol);
        prev = y;
        out[i] = 1.0 - acc / total;
    }
    Ok(out)
}

/// `I_x(a, b)` at one point.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> Result<f64> {
    Ok(beta_cdf_grid(&[x], a, b)?[0])
}

/// Differences this close to zero are not treated as having a sign.
pub const CROSSING_DEADBAND: f64 = 1e-9;

/// Sign changes of a sequence, ignoring entries within the deadband.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for &v in values {
        if v.abs() <= CROSSING_DEADBAND {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            changes += 1;
        }
        last = v.signum();
    }
    changes
}

/// Outcome of comparing `N(α/(α+β), 1/(α+β))` with `Beta(α, β)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub alpha: f64,
    pub beta: f64,
    pub crossings: usize,
    /// `x_i = i / (n + 1)`, `i = 1..=n`.
    pub grid: Vec<f64>,
    /// `F_N(x_i) − F_Beta(x_i)`.
    pub difference: Vec<f64>,
}

pub const MIN_CROSSING_GRID: usize = 1_000;

pub fn single_crossing_check(alpha: f64, beta: f64, grid_size: usize) -> Result<CrossingReport> {
    if grid_size < MIN_CROSSING_GRID {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least {MIN_CROSSING_GRID} points, got {grid_size}"
        )));
    }
    let grid: Vec<f64> = (1..=grid_size).map(|i| i as f64 / (grid_size as f64 + 1.0)).collect();
    let beta_cdf = beta_cdf_grid(&grid, alpha, beta)?;
    let mu = alpha / (alpha + beta);
    let sd = (alpha + beta).recip().sqrt();
    let difference: Vec<f64> = grid
        .iter()
        .zip(&beta_cdf)
        .map(|(x, fb)| normal_cdf((x - mu) / sd) - fb)
        .collect();
    Ok(CrossingReport { alpha, beta, crossings: count_sign_changes(&difference), grid, difference })
}

/// Exact `P(|Z| > γ) = erfc(γ/√2)` against the bound `½e^{−γ²/2}`.
pub fn two_sided_tail(gamma: f64) -> f64 {
    libm::erfc(gamma * FRAC_1_SQRT_2)
}

pub fn tail_bound(gamma: f64) -> f64 {
    0.5 * (-0.5 * gamma * gamma).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    /// `min_γ (bound − tail)` over the grid.
    pub min_slack: f64,
    pub worst_gamma: f64,
    /// Smallest grid point from which the bound holds at every larger grid point.
    pub holds_from: Option<f64>,
    /// `(γ, bound − tail)` per grid point.
    pub slack: Vec<(f64, f64)>,
}

pub fn gaussian_tail_check(gamma_grid: &[f64]) -> Result<TailReport> {
    if gamma_grid.is_empty() || gamma_grid.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::InvalidArgument("gamma grid must be nonempty and nonnegative".into()));
    }
    let slack: Vec<(f64, f64)> = gamma_grid.iter().map(|&g| (g, tail_bound(g) - two_sided_tail(g))).collect();
    let (worst_gamma, min_slack) = slack
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let mut sorted = slack.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut holds_from = None;
    for &(g, s) in sorted.iter().rev() {
        if s < 0.0 {
            break;
        }
        holds_from = Some(g);
    }
    Ok(TailReport { min_slack, worst_gamma, holds_from, slack })
}

/// Root of `½e^{−γ²/2} − erfc(γ/√2)` on `[0.5, 3]`, by bisection.
pub fn tail_bound_crossover() -> f64 {
    let f = |g: f64| tail_bound(g) - two_sided_tail(g);
    let (mut lo, mut hi) = (0.5, 3.0);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `E[X | X > λ] = φ(λ)/(1 − Φ(λ))` for standard normal `X`.
pub fn normal_hazard(lambda: f64) -> f64 {
    normal_pdf(lambda) / (0.5 * libm::erfc(lambda * FRAC_1_SQRT_2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMeanReport {
    /// `min_λ (λ + 1 − hazard(λ))`.
    pub min_slack: f64,
    pub worst_lambda: f64,
    pub slack: Vec<(f64, f64)>,
}

pub fn truncated_mean_check(lambda_grid: &[f64]) -> Result<TruncatedMeanReport> {
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l > 1.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("lambda grid must be nonempty with every value > 1".into()));
    }
    let slack: Vec<(f64, f64)> = lambda_grid.iter().map(|&l| (l, l + 1.0 - normal_hazard(l))).collect();
    let (worst_lambda, min_slack) = slack
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    Ok(TruncatedMeanReport { min_slack, worst_lambda, slack })
}

/// `n` evenly spaced points from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|i| start + (end - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reflexive_pair_is_null() {
        let pair = OptimismPair::new(|r| r.sample(rand_distr::StandardNormal), |r| r.sample(rand_distr::StandardNormal), "n-n");
        let est = check_optimism(&pair, ZLaw::StandardNormal, 100_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(est.delta.abs() <= 3.0 * est.std_error);
    }

    #[test]
    fn wider_gaussian_is_optimistic() {
        // E[max(x, z)] = sqrt((s_x² + s_z²) / 2π) for centred Gaussians
        let wide = Normal::new(0.0, 2f64.sqrt()).unwrap();
        let pair = OptimismPair::new(move |r| wide.sample(r), |r| r.sample(rand_distr::StandardNormal), "wide");
        let est = check_optimism(&pair, ZLaw::StandardNormal, 200_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let exact = (3.0 / (2.0 * PI)).sqrt() - (2.0 / (2.0 * PI)).sqrt();
        assert!(est.delta > 0.0);
        assert!((est.delta - exact).abs() <= 3.0 * est.std_error);
    }

    #[test]
    fn too_few_samples_rejected() {
        let spec = DirichletSpec::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let pair = gaussian_dirichlet_pair(&spec);
        assert!(check_optimism(&pair, ZLaw::UnitUniform, 100, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(DirichletSpec::new(vec![0.5, 1.2], vec![1.0, 1.0]).is_err());
        assert!(DirichletSpec::new(vec![0.5], vec![0.5]).is_err());
        assert!(DirichletSpec::new(vec![], vec![]).is_err());
        assert!(DirichletSpec::new(vec![0.1, 0.2], vec![1.0]).is_err());
    }

    #[test]
    fn degenerate_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let constant = DirichletSpec::new(vec![0.3; 3], vec![1.0, 2.0, 3.0]).unwrap();
        let pair = gaussian_dirichlet_pair(&constant);
        for _ in 0..100 {
            assert!(((pair.y)(&mut rng) - 0.3).abs() < 1e-12);
        }
        let one = DirichletSpec::new(vec![0.7], vec![4.0]).unwrap();
        let pair = gaussian_dirichlet_pair(&one);
        let mut m = MeanEstimate::default();
        for _ in 0..50_000 {
            assert_eq!((pair.y)(&mut rng), 0.7);
            m.push(((pair.x)(&mut rng) - 0.7).powi(2));
        }
        assert!((m.mean() - 0.25).abs() <= 3.0 * m.std_error());
        assert!(beta_projection(&constant).is_err());
    }

    #[test]
    fn projection_two_point_case() {
        let spec = DirichletSpec::new(vec![0.0, 1.0], vec![2.5, 4.0]).unwrap();
        assert_eq!(beta_projection(&spec).unwrap(), (4.0, 2.5));
        let unsorted = DirichletSpec::new(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(beta_projection(&unsorted).is_err());
    }

    #[test]
    fn beta_cdf_closed_forms() {
        // I_x(1,1) = x, I_x(2,1) = x², I_x(1,2) = 1 − (1−x)², I_x(1/2,1/2) = (2/π) asin √x
        for &x in &[0.01, 0.2, 0.5, 0.73, 0.99] {
            assert!((beta_cdf(x, 1.0, 1.0).unwrap() - x).abs() < 1e-12);
            assert!((beta_cdf(x, 2.0, 1.0).unwrap() - x * x).abs() < 1e-11);
            assert!((beta_cdf(x, 1.0, 2.0).unwrap() - (1.0 - (1.0 - x).powi(2))).abs() < 1e-11);
            let arcsine = 2.0 / PI * x.sqrt().asin();
            assert!((beta_cdf(x, 0.5, 0.5).unwrap() - arcsine).abs() < 1e-9, "x={x}");
        }
        assert_eq!(beta_cdf(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert!((beta_cdf(1.0, 3.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(beta_cdf(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn uniform_and_symmetric_crossings() {
        let r = single_crossing_check(1.0, 1.0, 10_000).unwrap();
        assert!(r.crossings <= 1);
        for a in [0.5, 2.0, 5.0] {
            let r = single_crossing_check(a, a, 10_001).unwrap();
            assert!(r.crossings <= 1);
            let n = r.grid.len();
            for i in 0..n {
                assert!((r.difference[i] + r.difference[n - 1 - i]).abs() < 1e-9);
            }
            assert!(r.difference[n / 2].abs() < 1e-9);
        }
        assert!(single_crossing_check(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn sign_change_counting() {
        assert_eq!(count_sign_changes(&[1.0, 1e-12, -1e-12, 2.0]), 0);
        assert_eq!(count_sign_changes(&[1.0, 0.0, -1.0, -2.0, 3.0]), 2);
        assert_eq!(count_sign_changes(&[]), 0);
    }

    #[test]
    fn tail_values() {
        assert!((two_sided_tail(2.0) - 0.045500263896358).abs() < 1e-12);
        assert!(two_sided_tail(2.0) <= tail_bound(2.0));
        assert!((two_sided_tail(3.0) - 0.002699796063260).abs() < 1e-12);
        assert!(two_sided_tail(3.0) <= tail_bound(3.0));
        let r = gaussian_tail_check(&[0.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.worst_gamma, 0.0);
        assert!((r.min_slack + 0.5).abs() < 1e-15);
        assert_eq!(r.holds_from, Some(2.0));
        let c = tail_bound_crossover();
        assert!(c > 1.0 && c < 1.6, "crossover {c}");
        assert!(tail_bound(c + 1e-6) >= two_sided_tail(c + 1e-6));
    }

    #[test]
    fn hazard_values() {
        assert!((normal_hazard(2.0) - 2.373215532).abs() < 1e-8);
        assert!((normal_hazard(10.0) - 10.098093).abs() < 1e-5);
        let r = truncated_mean_check(&[1.001, 2.0, 10.0]).unwrap();
        assert!(r.min_slack > 0.0);
        assert!(truncated_mean_check(&[1.0]).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(1.0, 2.0, 5);
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
