//! Ising models on `{−1, +1}ⁿ` with `P(x) ∝ exp(Σ_{i≠j} A_ij x_i x_j + Σ_i θ_i x_i)`.
//!
//! The sum runs over ordered pairs, so each unordered pair contributes
//! `2·A_ij·x_i·x_j`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::calibration::calibration;
use crate::discrete::tv_dense;
use crate::error::{check_unit_open, param, Error, Result};
use crate::estimator::{estimate_tv_from_draws, extra_error, required_samples, LnFnEval, TvEstimate};
use crate::limits;

/// A spin configuration, entries in `{−1, +1}`.
pub type Spins = Vec<i8>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExternalField {
    Uniform(f64),
    PerSite(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    /// Row-major `n × n`, symmetric, zero diagonal.
    coupling: Vec<f64>,
    field: ExternalField,
}

const SYMMETRY_TOLERANCE: f64 = 1e-12;

impl IsingModel {
    pub fn new(a: Vec<Vec<f64>>, field: ExternalField) -> Result<Self> {
        let n = a.len();
        if let Some(row) = a.iter().position(|r| r.len() != n) {
            return param(format!("interaction row {row} does not have {n} entries"));
        }
        if let ExternalField::PerSite(t) = &field {
            if t.len() != n {
                return param(format!("per-site field has {} entries for {n} spins", t.len()));
            }
        }
        let finite_field = match &field {
            ExternalField::Uniform(t) => t.is_finite(),
            ExternalField::PerSite(t) => t.iter().all(|v| v.is_finite()),
        };
        if !finite_field {
            return param("external field must be finite");
        }
        let mut coupling = vec![0.0; n * n];
        for i in 0..n {
            if a[i][i] != 0.0 {
                return param(format!("diagonal entry A[{i}][{i}] must be 0"));
            }
            for j in 0..n {
                let (x, y) = (a[i][j], a[j][i]);
                if !x.is_finite() || (x - y).abs() > SYMMETRY_TOLERANCE {
                    return param(format!("A is not symmetric and finite at ({i}, {j})"));
                }
                coupling[i * n + j] = 0.5 * (x + y);
            }
        }
        Ok(Self { n, coupling, field })
    }

    /// `A = 0` with a uniform field.
    pub fn independent(n: usize, theta: f64) -> Self {
        Self::new(vec![vec![0.0; n]; n], ExternalField::Uniform(theta)).expect("valid")
    }

    /// Ferromagnetic model with `A_ij ~ U(0,1)` rescaled so the width is exactly `width`.
    pub fn random_ferromagnetic(n: usize, width: f64, theta: f64, rng: &mut dyn RngCore) -> Result<Self> {
        if !(width > theta.abs()) {
            return param(format!("width {width} must exceed |theta| = {}", theta.abs()));
        }
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.random();
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let max_row = a.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
        if max_row > 0.0 {
            let scale = (width - theta.abs()) / max_row;
            a.iter_mut().flatten().for_each(|v| *v *= scale);
        }
        Self::new(a, ExternalField::Uniform(theta))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n + j]
    }

    pub fn coupling_matrix(&self) -> Vec<Vec<f64>> {
        self.coupling.chunks(self.n.max(1)).map(<[f64]>::to_vec).take(self.n).collect()
    }

    pub fn field(&self) -> &ExternalField {
        &self.field
    }

    pub fn theta(&self, i: usize) -> f64 {
        match &self.field {
            ExternalField::Uniform(t) => *t,
            ExternalField::PerSite(t) => t[i],
        }
    }

    /// `max_i Σ_j |A_ij| + |θ_i|`.
    pub fn width(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.coupling(i, j).abs()).sum::<f64>() + self.theta(i).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_ferromagnetic(&self) -> bool {
        self.coupling.iter().all(|&a| a >= 0.0)
    }

    fn has_interactions(&self) -> bool {
        self.coupling.iter().any(|&a| a != 0.0)
    }

    pub fn check_spins(&self, x: &[i8]) -> Result<()> {
        if x.len() != self.n {
            return param(format!("spin vector has length {}, model has {} spins", x.len(), self.n));
        }
        if let Some(v) = x.iter().find(|&&v| v != 1 && v != -1) {
            return param(format!("spin value {v} is not ±1"));
        }
        Ok(())
    }

    /// `Σ_j A_ij x_j`.
    fn neighbor_sum(&self, i: usize, x: &[i8]) -> f64 {
        let row = &self.coupling[i * self.n..(i + 1) * self.n];
        row.iter().zip(x).map(|(a, &s)| a * s as f64).sum()
    }

    /// `Σ_{i≠j} A_ij x_i x_j`.
    pub fn interaction_energy(&self, x: &[i8]) -> f64 {
        (0..self.n).map(|i| x[i] as f64 * self.neighbor_sum(i, x)).sum()
    }

    pub fn field_energy(&self, x: &[i8]) -> f64 {
        (0..self.n).map(|i| self.theta(i) * x[i] as f64).sum()
    }

    pub(crate) fn log_numerator_unchecked(&self, x: &[i8]) -> f64 {
        self.interaction_energy(x) + self.field_energy(x)
    }

    /// `ln N(x) = Σ_{i≠j} A_ij x_i x_j + Σ_i θ_i x_i`.
    pub fn log_numerator(&self, x: &[i8]) -> Result<f64> {
        self.check_spins(x)?;
        Ok(self.log_numerator_unchecked(x))
    }

    /// `ln` of the product partition function of the `A = 0` model.
    fn ln_base_partition(&self) -> f64 {
        (0..self.n).map(|i| ln_two_cosh(self.theta(i))).sum()
    }

    /// Normalized pmf over all `2ⁿ` configurations in [`spins_from_index`] order.
    pub fn pmf(&self) -> Result<Vec<f64>> {
        limits::check("Ising enumeration", self.n as u32, limits::ISING_ENUM_BITS)?;
        let logs: Vec<f64> = (0..1usize << self.n)
            .map(|idx| self.log_numerator_unchecked(&spins_from_index(idx, self.n)))
            .collect();
        let ln_z = log_sum_exp(&logs);
        Ok(logs.iter().map(|l| (l - ln_z).exp()).collect())
    }
}

pub fn ising_log_numerator(m: &IsingModel, x: &[i8]) -> Result<f64> {
    m.log_numerator(x)
}

/// Spin `i` is `+1` iff bit `n-1-i` of `idx` is set.
pub fn spins_from_index(idx: usize, n: usize) -> Spins {
    (0..n).map(|i| if (idx >> (n - 1 - i)) & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn index_from_spins(x: &[i8]) -> usize {
    x.iter().fold(0, |acc, &s| (acc << 1) | usize::from(s > 0))
}

fn ln_two_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (1.0 + (-2.0 * a).exp()).ln()
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMethod {
    Exact,
    AnnealedImportanceSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    /// `ln Ẑ`; the value itself may overflow for large models.
    pub ln_value: f64,
    /// Multiplicative slack targeted (0 for exact).
    pub epsilon: f64,
    pub method: PartitionMethod,
    pub chains: usize,
    /// Effective sample size of the importance weights over `chains`.
    pub ess_fraction: f64,
}

impl PartitionEstimate {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// `Z = Σ_x N(x)` by enumeration (log-sum-exp).
pub fn exact_partition(m: &IsingModel) -> Result<PartitionEstimate> {
    limits::check("Ising enumeration", m.n as u32, limits::ISING_ENUM_BITS)?;
    let logs: Vec<f64> = (0..1usize << m.n)
        .map(|idx| m.log_numerator_unchecked(&spins_from_index(idx, m.n)))
        .collect();
    Ok(PartitionEstimate {
        ln_value: log_sum_exp(&logs),
        epsilon: 0.0,
        method: PartitionMethod::Exact,
        chains: 0,
        ess_fraction: 1.0,
    })
}

/// Annealed importance sampling estimate of `Z`.
///
/// Chains start from the product model (`A = 0`, same field), whose partition
/// function is known, and anneal the interaction strength linearly from 0 to
/// 1 in `steps_per_spin · n` heat-bath sweeps. Chains are added in batches
/// until `z_δ · relSE ≤ ε` with `z_δ = sqrt(2 ln(2/δ))`; a low effective
/// sample size or an unmet target is an error.
pub fn estimate_partition(m: &IsingModel, epsilon: f64, delta: f64, rng: &mut dyn RngCore) -> Result<PartitionEstimate> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    let cal = &calibration().ais;
    let ln_z0 = m.ln_base_partition();
    if !m.has_interactions() {
        return Ok(PartitionEstimate {
            ln_value: ln_z0,
            epsilon,
            method: PartitionMethod::AnnealedImportanceSampling,
            chains: 1,
            ess_fraction: 1.0,
        });
    }
    let steps = (cal.steps_per_spin * m.n).max(1);
    let z_delta = (2.0 * (2.0 / delta).ln()).sqrt();
    let mut log_weights = Vec::new();
    loop {
        for _ in 0..cal.chain_batch {
            log_weights.push(ais_chain(m, steps, rng));
        }
        let stats = weight_stats(&log_weights);
        let done = z_delta * stats.rel_se <= epsilon && log_weights.len() >= 2 * cal.chain_batch;
        if done || log_weights.len() >= cal.max_chains {
            if stats.ess_fraction < cal.ess_floor {
                return Err(Error::Estimation(format!(
                    "AIS effective sample size fraction {:.3} below floor {}",
                    stats.ess_fraction, cal.ess_floor
                )));
            }
            if !done {
                return Err(Error::Estimation(format!(
                    "AIS relative standard error {:.4} after {} chains misses epsilon {epsilon}",
                    stats.rel_se,
                    log_weights.len()
                )));
            }
            return Ok(PartitionEstimate {
                ln_value: ln_z0 + stats.ln_mean,
                epsilon,
                method: PartitionMethod::AnnealedImportanceSampling,
                chains: log_weights.len(),
                ess_fraction: stats.ess_fraction,
            });
        }
    }
}

struct WeightStats {
    ln_mean: f64,
    rel_se: f64,
    ess_fraction: f64,
}

fn weight_stats(log_weights: &[f64]) -> WeightStats {
    let m = log_weights.len() as f64;
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = w.iter().sum();
    let sum_sq: f64 = w.iter().map(|v| v * v).sum();
    let mean = sum / m;
    let var = if m > 1.0 {
        w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        f64::INFINITY
    };
    WeightStats {
        ln_mean: max + mean.ln(),
        rel_se: (var / m).sqrt() / mean,
        ess_fraction: sum * sum / sum_sq / m,
    }
}

/// One annealing chain; returns its log importance weight.
fn ais_chain(m: &IsingModel, steps: usize, rng: &mut dyn RngCore) -> f64 {
    let n = m.n;
    let mut x: Spins = (0..n)
        .map(|i| if rng.random::<f64>() < sigmoid(2.0 * m.theta(i)) { 1 } else { -1 })
        .collect();
    let mut energy = m.interaction_energy(&x);
    let mut log_w = 0.0;
    let step = 1.0 / steps as f64;
    for k in 1..=steps {
        let beta = k as f64 * step;
        log_w += step * energy;
        if k == steps {
            break;
        }
        for i in 0..n {
            let s = m.neighbor_sum(i, &x);
            let h = 2.0 * beta * s + m.theta(i);
            let new = if rng.random::<f64>() < sigmoid(2.0 * h) { 1 } else { -1 };
            if new != x[i] {
                energy += 4.0 * new as f64 * s;
                x[i] = new;
            }
        }
    }
    log_w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// Inverse CDF over the enumerated pmf.
    Exact,
    /// Single-site heat-bath dynamics; approximate.
    Glauber { burn_in: usize, thinning: usize },
}

/// Draws `count` configurations.
pub fn ising_sample(m: &IsingModel, mode: SamplingMode, count: usize, rng: &mut dyn RngCore) -> Result<Vec<Spins>> {
    match mode {
        SamplingMode::Exact => {
            let sampler = ExactIsingSampler::new(m)?;
            Ok((0..count).map(|_| sampler.draw(rng)).collect())
        }
        SamplingMode::Glauber { burn_in, thinning } => {
            let mut chain = GlauberChain::new(m, burn_in, thinning, rng)?;
            Ok((0..count).map(|_| chain.next_sample(rng)).collect())
        }
    }
}

/// Exact sampler over the enumerated pmf.
#[derive(Debug, Clone)]
pub struct ExactIsingSampler {
    n: usize,
    pmf: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ExactIsingSampler {
    pub fn new(m: &IsingModel) -> Result<Self> {
        let pmf = m.pmf()?;
        let mut acc = 0.0;
        let cumulative = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { n: m.n, pmf, cumulative })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn draw_index(&self, rng: &mut dyn RngCore) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.pmf.len() - 1)
    }

    pub fn draw(&self, rng: &mut dyn RngCore) -> Spins {
        spins_from_index(self.draw_index(rng), self.n)
    }

    /// Histogram of `count` i.i.d. draws, drawn directly as a multinomial.
    pub fn draw_histogram(&self, count: u64, rng: &mut dyn RngCore) -> SpinHistogram {
        let mut counts = BTreeMap::new();
        let mut remaining = count;
        let mut mass_left = 1.0;
        for (idx, &p) in self.pmf.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let c = if idx + 1 == self.pmf.len() || p >= mass_left {
                remaining
            } else {
                let q = (p / mass_left).clamp(0.0, 1.0);
                Binomial::new(remaining, q).expect("valid binomial").sample(rng)
            };
            if c > 0 {
                counts.insert(spins_from_index(idx, self.n), c);
            }
            remaining -= c;
            mass_left -= p;
        }
        SpinHistogram { n: self.n, counts }
    }
}

impl crate::estimator::Sampler<Spins> for ExactIsingSampler {
    fn draw(&self, rng: &mut dyn RngCore) -> Spins {
        ExactIsingSampler::draw(self, rng)
    }
}

/// A heat-bath chain emitting one state every `thinning` sweeps after `burn_in` sweeps.
#[derive(Debug, Clone)]
pub struct GlauberChain<'a> {
    model: &'a IsingModel,
    state: Spins,
    thinning: usize,
}

impl<'a> GlauberChain<'a> {
    pub fn new(model: &'a IsingModel, burn_in: usize, thinning: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if burn_in == 0 || thinning == 0 {
            return param("Glauber burn_in and thinning must be positive");
        }
        let state = (0..model.n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let mut chain = Self { model, state, thinning };
        for _ in 0..burn_in {
            chain.sweep(rng);
        }
        Ok(chain)
    }

    pub fn from_state(model: &'a IsingModel, state: Spins) -> Self {
        Self { model, state, thinning: 1 }
    }

    pub fn state(&self) -> &[i8] {
        &self.state
    }

    /// One heat-bath update of every site in order.
    pub fn sweep(&mut self, rng: &mut dyn RngCore) {
        heat_bath_sweep(self.model, &mut self.state, rng);
    }

    pub fn next_sample(&mut self, rng: &mut dyn RngCore) -> Spins {
        for _ in 0..self.thinning {
            self.sweep(rng);
        }
        self.state.clone()
    }
}

pub fn heat_bath_sweep(m: &IsingModel, x: &mut [i8], rng: &mut dyn RngCore) {
    for i in 0..m.n {
        let h = 2.0 * m.neighbor_sum(i, x) + m.theta(i);
        x[i] = if rng.random::<f64>() < sigmoid(2.0 * h) { 1 } else { -1 };
    }
}

/// Replaces every negative interaction by zero.
pub fn ferromagnetic_clamp(m: &IsingModel) -> IsingModel {
    let mut out = m.clone();
    out.coupling.iter_mut().for_each(|a| *a = a.max(0.0));
    out
}

/// Counts of observed configurations; the sufficient statistic of an i.i.d.
/// sample for the learner.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpinHistogram {
    n: usize,
    counts: BTreeMap<Spins, u64>,
}

impl SpinHistogram {
    pub fn from_rows(rows: &[Spins]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let mut counts = BTreeMap::new();
        for (r, x) in rows.iter().enumerate() {
            if x.len() != n {
                return param(format!("row {r} has {} spins, expected {n}", x.len()));
            }
            if x.iter().any(|&s| s != 1 && s != -1) {
                return param(format!("row {r} has a spin outside ±1"));
            }
            *counts.entry(x.clone()).or_insert(0) += 1;
        }
        Ok(Self { n, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Spins, u64)> {
        self.counts.iter().map(|(x, &c)| (x, c))
    }

    /// Removes `t` rows uniformly without replacement and returns them.
    pub fn take_holdout(&mut self, t: usize, rng: &mut dyn RngCore) -> Result<Vec<Spins>> {
        let mut total = self.total();
        if (t as u64) > total {
            return Err(Error::InsufficientSamples {
                what: "held-out rows",
                required: t,
                got: total as usize,
            });
        }
        let mut out = Vec::with_capacity(t);
        for _ in 0..t {
            let mut u = rng.random_range(0..total);
            let key = self
                .counts
                .iter()
                .find_map(|(x, &c)| {
                    if u < c {
                        Some(x.clone())
                    } else {
                        u -= c;
                        None
                    }
                })
                .expect("u < total");
            let c = self.counts.get_mut(&key).expect("present");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&key);
            }
            total -= 1;
            out.push(key);
        }
        Ok(out)
    }
}

/// Learner sample budget `ceil(C·e^{2d}·n²·ln(max(n,2)/δ)/ε²)`, `C` calibrated.
pub fn ising_learning_budget(n: usize, width_bound: f64, epsilon: f64, delta: f64) -> Result<usize> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    if !(width_bound > 0.0) {
        return param("width bound must be positive");
    }
    let c = calibration().ising.learning_constant;
    let nf = n as f64;
    let m = c * (2.0 * width_bound).exp() * nf * nf * (nf.max(2.0) / delta).ln() / (epsilon * epsilon);
    Ok(m.ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldShape {
    #[default]
    Uniform,
    PerSite,
}

/// Pseudo-likelihood learner with a width projection.
///
/// Each spin's conditional law given the rest is logistic,
/// `P(x_i = s | x_−i) = σ(2s(2Σ_j A_ij x_j + θ_i))`; one Newton-fitted
/// regression per spin, averaged across the symmetric pair, gives `Â`.
/// If the width exceeds `width_bound + 1` the model is scaled down onto it.
pub fn learn_ising(samples: &SpinHistogram, width_bound: f64, epsilon: f64, delta: f64) -> Result<IsingModel> {
    learn_ising_with(samples, width_bound, epsilon, delta, FieldShape::Uniform)
}

pub fn learn_ising_with(
    samples: &SpinHistogram,
    width_bound: f64,
    epsilon: f64,
    delta: f64,
    field: FieldShape,
) -> Result<IsingModel> {
    let n = samples.n();
    if n == 0 {
        return param("no spins to learn");
    }
    let required = ising_learning_budget(n, width_bound, epsilon, delta)?;
    let got = samples.total() as usize;
    if got < required {
        return Err(Error::InsufficientSamples {
            what: "Ising learner",
            required,
            got,
        });
    }
    fit_pseudo_likelihood(samples, width_bound, field)
}

/// The learner without its sample-budget check.
pub fn fit_pseudo_likelihood(samples: &SpinHistogram, width_bound: f64, field: FieldShape) -> Result<IsingModel> {
    let n = samples.n();
    if n == 0 || samples.total() == 0 {
        return param("no samples to learn from");
    }
    let mut weights = vec![vec![0.0; n]; n];
    let mut biases = vec![0.0; n];
    for i in 0..n {
        let (w, b) = fit_conditional(samples, i)?;
        weights[i] = w;
        biases[i] = b;
    }
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            // w_ij estimates 2·A_ij from spin i's regression.
            let v = 0.25 * (weights[i][j] + weights[j][i]);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    let field = match field {
        FieldShape::Uniform => ExternalField::Uniform(biases.iter().sum::<f64>() / n as f64),
        FieldShape::PerSite => ExternalField::PerSite(biases),
    };
    let model = IsingModel::new(a, field)?;
    Ok(project_width(&model, width_bound + 1.0))
}

/// Scales couplings and field by a common factor so the width is at most `limit`.
pub fn project_width(m: &IsingModel, limit: f64) -> IsingModel {
    let w = m.width();
    if w <= limit || w == 0.0 {
        return m.clone();
    }
    let s = limit / w;
    let mut out = m.clone();
    out.coupling.iter_mut().for_each(|a| *a *= s);
    out.field = match &m.field {
        ExternalField::Uniform(t) => ExternalField::Uniform(t * s),
        ExternalField::PerSite(t) => ExternalField::PerSite(t.iter().map(|v| v * s).collect()),
    };
    out
}

/// Newton's method for the weighted logistic regression of spin `i` on the
/// others. Returns `(w, b)` with `w_i = 0`, in the parametrization
/// `P(x_i = s | rest) = σ(2s(Σ_j w_j x_j + b))`.
fn fit_conditional(samples: &SpinHistogram, i: usize) -> Result<(Vec<f64>, f64)> {
    let n = samples.n();
    let dim = n; // n-1 couplings + bias
    let features = |x: &[i8]| -> DVector<f64> {
        let mut f = DVector::zeros(dim);
        let mut k = 0;
        for (j, &s) in x.iter().enumerate() {
            if j != i {
                f[k] = s as f64;
                k += 1;
            }
        }
        f[dim - 1] = 1.0;
        f
    };
    let rows: Vec<(DVector<f64>, f64, f64)> = samples
        .iter()
        .map(|(x, c)| (features(x), x[i] as f64, c as f64))
        .collect();
    let total = samples.total() as f64;
    // Tiny ridge keeps Newton defined on separable data.
    let ridge = 1e-8 * total;
    let mut theta = DVector::zeros(dim);
    for _ in 0..100 {
        let mut grad = -ridge * &theta;
        let mut hess = DMatrix::identity(dim, dim) * ridge;
        for (f, y, c) in &rows {
            let h = f.dot(&theta);
            let p = sigmoid(2.0 * y * h);
            grad.axpy(c * 2.0 * y * (1.0 - p), f, 1.0);
            let curvature = c * 4.0 * p * (1.0 - p);
            hess.ger(curvature, f, f, 1.0);
        }
        let chol = hess
            .cholesky()
            .ok_or_else(|| Error::Estimation(format!("pseudo-likelihood Hessian for spin {i} is singular")))?;
        let step = chol.solve(&grad);
        theta += &step;
        if step.amax() < 1e-10 {
            break;
        }
    }
    let mut w = vec![0.0; n];
    let mut k = 0;
    for (j, slot) in w.iter_mut().enumerate() {
        if j != i {
            *slot = theta[k];
            k += 1;
        }
    }
    Ok((w, theta[dim - 1]))
}

/// Outcome of the partition-free ratio comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparison {
    Ratio(f64),
    High,
    Low,
}

/// `N(x)/N(z)` if it lies in `[1/K, K]`, else `High`/`Low`.
pub fn compare_ratio(m: &IsingModel, x: &[i8], z: &[i8], k: f64) -> Result<Comparison> {
    if !(k >= 1.0) {
        return param(format!("K must be at least 1, got {k}"));
    }
    let log_ratio = m.log_numerator(x)? - m.log_numerator(z)?;
    Ok(if log_ratio > k.ln() {
        Comparison::High
    } else if log_ratio < -k.ln() {
        Comparison::Low
    } else {
        Comparison::Ratio(log_ratio.exp())
    })
}

/// Everything the Ising pipeline produced.
#[derive(Debug, Clone)]
pub struct IsingTvReport {
    pub estimate: TvEstimate,
    pub learned_p: IsingModel,
    pub learned_q: Option<IsingModel>,
    pub partition_p: PartitionEstimate,
    pub partition_q: Option<PartitionEstimate>,
}

/// Slack of the learned evaluators for a total budget `epsilon`:
/// `(β, γ, ε_MC) = (ε/8, ε/4, ε − 2(ε/4)/(1−ε/4) − 3ε/8)`.
pub fn ising_error_split(epsilon: f64) -> Result<(f64, f64, f64)> {
    check_unit_open("epsilon", epsilon)?;
    let beta = epsilon / 8.0;
    let gamma = epsilon / 4.0;
    let mc = epsilon - extra_error(beta, gamma, beta, gamma);
    if !(mc > 0.0) {
        return param(format!("epsilon = {epsilon} leaves no Monte Carlo budget"));
    }
    Ok((beta, gamma, mc))
}

fn learned_evaluator(
    samples: &SpinHistogram,
    width_bound: f64,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<(IsingModel, PartitionEstimate)> {
    let (beta, _, _) = ising_error_split(epsilon)?;
    let learned = ferromagnetic_clamp(&learn_ising(samples, width_bound, beta, delta)?);
    let z = estimate_partition(&learned, beta, delta, rng)?;
    Ok((learned, z))
}

/// Learn both models (pointwise target `ε/8`), clamp them ferromagnetic,
/// estimate both partition functions to `1 ± ε/8`, and run the distance
/// estimator with `(ε/8, ε/4)` evaluators on held-out `P` rows.
pub fn estimate_tv_ising(
    samples_p: &SpinHistogram,
    samples_q: &SpinHistogram,
    width_bound: f64,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<IsingTvReport> {
    check_unit_open("delta", delta)?;
    if samples_p.n() != samples_q.n() {
        return param("sample sets cover different numbers of spins");
    }
    let (beta, gamma, mc) = ising_error_split(epsilon)?;
    let mut learn_p = samples_p.clone();
    let holdout = learn_p.take_holdout(required_samples(mc, delta / 2.0)?, rng)?;
    let (model_p, z_p) = learned_evaluator(&learn_p, width_bound, epsilon, delta / 8.0, rng)?;
    let (model_q, z_q) = learned_evaluator(samples_q, width_bound, epsilon, delta / 8.0, rng)?;
    let eval_p = LnFnEval {
        ln_mass: |x: &Spins| model_p.log_numerator_unchecked(x) - z_p.ln_value,
        beta,
        gamma,
    };
    let eval_q = LnFnEval {
        ln_mass: |x: &Spins| model_q.log_numerator_unchecked(x) - z_q.ln_value,
        beta,
        gamma,
    };
    let estimate = estimate_tv_from_draws(&holdout, &eval_p, &eval_q, mc, delta / 2.0)?;
    Ok(IsingTvReport {
        estimate,
        learned_p: model_p,
        learned_q: Some(model_q),
        partition_p: z_p,
        partition_q: Some(z_q),
    })
}

/// Distance from the sampled model to the uniform law on `{−1,1}ⁿ`, whose
/// evaluator `2⁻ⁿ` is exact.
pub fn estimate_tv_ising_to_uniform(
    samples_p: &SpinHistogram,
    width_bound: f64,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<IsingTvReport> {
    check_unit_open("delta", delta)?;
    let (beta, gamma, _) = ising_error_split(epsilon)?;
    // Only P is approximate here, but the split is kept for a uniform contract.
    let mc = epsilon - extra_error(beta, gamma, 0.0, 0.0);
    let mut learn_p = samples_p.clone();
    let holdout = learn_p.take_holdout(required_samples(mc, delta / 2.0)?, rng)?;
    let (model_p, z_p) = learned_evaluator(&learn_p, width_bound, epsilon, delta / 4.0, rng)?;
    let n = samples_p.n();
    let eval_p = LnFnEval {
        ln_mass: |x: &Spins| model_p.log_numerator_unchecked(x) - z_p.ln_value,
        beta,
        gamma,
    };
    let ln_uniform = -(n as f64) * std::f64::consts::LN_2;
    let eval_u = LnFnEval {
        ln_mass: |_: &Spins| ln_uniform,
        beta: 0.0,
        gamma: 0.0,
    };
    let estimate = estimate_tv_from_draws(&holdout, &eval_p, &eval_u, mc, delta / 2.0)?;
    Ok(IsingTvReport {
        estimate,
        learned_p: model_p,
        learned_q: None,
        partition_p: z_p,
        partition_q: None,
    })
}

/// Exact `dTV` between two enumerable models.
pub fn exact_tv_ising(p: &IsingModel, q: &IsingModel) -> Result<f64> {
    if p.n() != q.n() {
        return param("models have different numbers of spins");
    }
    Ok(tv_dense(&p.pmf()?, &q.pmf()?))
}

// JSON interchange.

/// `{"n", "A", "theta"}` model file; `theta` is a number or a per-site list.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IsingJson {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub theta: ExternalField,
}

impl From<&IsingModel> for IsingJson {
    fn from(m: &IsingModel) -> Self {
        Self {
            n: m.n,
            a: m.coupling_matrix(),
            theta: m.field.clone(),
        }
    }
}

impl TryFrom<IsingJson> for IsingModel {
    type Error = Error;

    fn try_from(json: IsingJson) -> Result<Self> {
        if json.a.len() != json.n {
            return Err(Error::Model(format!("n = {} but A has {} rows", json.n, json.a.len())));
        }
        IsingModel::new(json.a, json.theta).map_err(|e| Error::Model(e.to_string()))
    }
}
