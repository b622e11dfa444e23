//! Multivariate Gaussians: densities, empirical learning, sampling and
//! distance estimation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calibration::calibration;
use crate::error::{check_unit_open, param, Error, Result};
use crate::estimator::{estimate_tv, estimate_tv_from_draws, required_samples, EvalApproximator, LnFnEval, Sampler, TvEstimate};

const SYMMETRY_TOLERANCE: f64 = 1e-10;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone)]
pub struct GaussianParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    logdet: f64,
    ridge: f64,
}

impl GaussianParams {
    pub fn new(mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return param("dimension must be positive");
        }
        if sigma.len() != n || sigma.iter().any(|r| r.len() != n) {
            return param(format!("covariance must be {n}×{n}"));
        }
        if mu.iter().chain(sigma.iter().flatten()).any(|v| !v.is_finite()) {
            return param("mean and covariance must be finite");
        }
        let sigma = DMatrix::from_fn(n, n, |i, j| sigma[i][j]);
        for i in 0..n {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return param(format!("covariance is not symmetric at ({i}, {j})"));
                }
            }
        }
        Self::from_parts(DVector::from_vec(mu), sigma, 0.0)
    }

    fn from_parts(mu: DVector<f64>, sigma: DMatrix<f64>, ridge: f64) -> Result<Self> {
        let chol = Cholesky::new(sigma.clone()).ok_or_else(|| Error::Parameter("covariance is not positive definite".into()))?;
        let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self { mu, sigma, chol, logdet, ridge })
    }

    pub fn standard(n: usize) -> Self {
        Self::from_parts(DVector::zeros(n), DMatrix::identity(n, n), 0.0).expect("identity is positive definite")
    }

    /// `μ` uniform on `[−1, 1]ⁿ`, `Σ = MᵀM + 0.1·I` with `M` uniform on `[−1, 1]`.
    pub fn random(n: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if n == 0 {
            return param("dimension must be positive");
        }
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        let mu = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let mut sigma = m.transpose() * &m + DMatrix::identity(n, n) * 0.1;
        sigma.fill_upper_triangle_with_lower_triangle();
        Self::from_parts(mu, sigma, 0.0)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Lower-triangular `L` with `Σ = L·Lᵀ`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Ridge `λ` added to the diagonal by the learner (0 otherwise).
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n() {
            return param(format!("point has dimension {}, model has {}", x.len(), self.n()));
        }
        Ok(self.logpdf_unchecked(x))
    }

    pub(crate) fn logpdf_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let centered = DVector::from_fn(n, |i, _| x[i] - self.mu[i]);
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&centered)
            .expect("Cholesky factor has a positive diagonal");
        -0.5 * (n as f64 * LN_2PI + self.logdet + z.norm_squared())
    }

    /// `L·v + μ` with `v` standard normal.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let n = self.n();
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let x = self.chol.l_dirty().lower_triangle() * v + &self.mu;
        x.iter().copied().collect()
    }
}

pub fn gaussian_logpdf(g: &GaussianParams, x: &[f64]) -> Result<f64> {
    g.logpdf(x)
}

pub fn gaussian_sample(g: &GaussianParams, rng: &mut dyn RngCore) -> Vec<f64> {
    g.sample(rng)
}

impl EvalApproximator<Vec<f64>> for GaussianParams {
    fn eval(&self, x: &Vec<f64>) -> f64 {
        self.ln_eval(x).exp()
    }
    fn ln_eval(&self, x: &Vec<f64>) -> f64 {
        if x.len() == self.n() {
            self.logpdf_unchecked(x)
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl Sampler<Vec<f64>> for GaussianParams {
    fn draw(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.sample(rng)
    }
}

/// Empirical mean and `1/m` covariance. If the covariance does not factor,
/// a ridge `λI` is added starting at `λ = 1e−9·trace/n` and growing ×10.
pub fn learn_gaussian(samples: &[Vec<f64>]) -> Result<GaussianParams> {
    if samples.len() < 2 {
        return param(format!("need at least 2 samples, got {}", samples.len()));
    }
    let n = samples[0].len();
    if n == 0 {
        return param("samples have dimension 0");
    }
    if let Some(r) = samples.iter().position(|x| x.len() != n) {
        return param(format!("sample {r} has dimension {}, expected {n}", samples[r].len()));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return param("samples must be finite");
    }
    let m = samples.len() as f64;
    let mut mu = DVector::zeros(n);
    for x in samples {
        mu += DVector::from_column_slice(x);
    }
    mu /= m;
    let mut sigma = DMatrix::zeros(n, n);
    for x in samples {
        let c = DVector::from_column_slice(x) - &mu;
        sigma.syger(1.0, &c, &c, 1.0);
    }
    sigma /= m;
    // syger fills only the lower triangle.
    sigma.fill_upper_triangle_with_lower_triangle();
    if let Ok(g) = GaussianParams::from_parts(mu.clone(), sigma.clone(), 0.0) {
        return Ok(g);
    }
    let trace = sigma.trace();
    let mut lambda = 1e-9 * if trace > 0.0 { trace / n as f64 } else { 1.0 };
    for _ in 0..40 {
        let ridged = &sigma + DMatrix::identity(n, n) * lambda;
        if let Ok(g) = GaussianParams::from_parts(mu.clone(), ridged, lambda) {
            log::debug!("empirical covariance regularized with ridge {lambda:e}");
            return Ok(g);
        }
        lambda *= 10.0;
    }
    Err(Error::Estimation("empirical covariance could not be regularized".into()))
}

/// `ceil(C·n²/ε²)`, `C` calibrated.
pub fn gaussian_learning_budget(n: usize, epsilon: f64) -> Result<usize> {
    check_unit_open("epsilon", epsilon)?;
    let c = calibration().gaussian.learning_constant;
    Ok((c * (n * n) as f64 / (epsilon * epsilon)).ceil() as usize)
}

/// Distance estimator with exact densities, sampling from `p`.
pub fn tv_between_gaussians_params(
    p: &GaussianParams,
    q: &GaussianParams,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<TvEstimate> {
    if p.n() != q.n() {
        return param(format!("dimensions differ: {} vs {}", p.n(), q.n()));
    }
    estimate_tv(p, p, q, epsilon, delta, rng)
}

#[derive(Debug, Clone)]
pub struct GaussianTvReport {
    pub estimate: TvEstimate,
    pub learned_p: GaussianParams,
    pub learned_q: GaussianParams,
    pub learning_samples_p: usize,
}

/// Learns both Gaussians at `ε/4` and runs the estimator at Monte Carlo
/// accuracy `ε/4` on the last `P` rows, which are withheld from learning.
pub fn estimate_tv_gaussians(
    samples_p: &[Vec<f64>],
    samples_q: &[Vec<f64>],
    epsilon: f64,
    delta: f64,
) -> Result<GaussianTvReport> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    let n = samples_p.first().map_or(0, Vec::len);
    if samples_q.first().map_or(0, Vec::len) != n {
        return param("sample sets have different dimensions");
    }
    let budget = gaussian_learning_budget(n, epsilon / 4.0)?;
    let t = required_samples(epsilon / 4.0, delta / 2.0)?;
    if samples_p.len() < budget + t {
        return Err(Error::InsufficientSamples {
            what: "Gaussian P samples",
            required: budget + t,
            got: samples_p.len(),
        });
    }
    if samples_q.len() < budget {
        return Err(Error::InsufficientSamples {
            what: "Gaussian Q samples",
            required: budget,
            got: samples_q.len(),
        });
    }
    let (learn_rows, holdout) = samples_p.split_at(samples_p.len() - t);
    let learned_p = learn_gaussian(learn_rows)?;
    let learned_q = learn_gaussian(samples_q)?;
    let slack = epsilon / 4.0;
    let eval_p = LnFnEval { ln_mass: |x: &Vec<f64>| learned_p.ln_eval(x), beta: slack, gamma: 0.0 };
    let eval_q = LnFnEval { ln_mass: |x: &Vec<f64>| learned_q.ln_eval(x), beta: slack, gamma: 0.0 };
    let estimate = estimate_tv_from_draws(holdout, &eval_p, &eval_q, epsilon / 4.0, delta / 2.0)?;
    Ok(GaussianTvReport {
        estimate,
        learning_samples_p: learn_rows.len(),
        learned_p,
        learned_q,
    })
}

/// `2Φ(|μ₁−μ₂|/(2σ)) − 1` for two 1-D Gaussians sharing `σ`.
pub fn tv_equal_variance_1d(mu1: f64, mu2: f64, sigma: f64) -> f64 {
    libm::erf((mu1 - mu2).abs() / (2.0 * sigma * std::f64::consts::SQRT_2))
}

// JSON interchange.

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaussianJson {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

impl From<&GaussianParams> for GaussianJson {
    fn from(g: &GaussianParams) -> Self {
        let n = g.n();
        Self {
            mu: g.mu.iter().copied().collect(),
            sigma: (0..n).map(|i| (0..n).map(|j| g.sigma[(i, j)]).collect()).collect(),
        }
    }
}

impl TryFrom<GaussianJson> for GaussianParams {
    type Error = Error;

    fn try_from(json: GaussianJson) -> Result<Self> {
        GaussianParams::new(json.mu, json.sigma).map_err(|e| Error::Model(e.to_string()))
    }
}
