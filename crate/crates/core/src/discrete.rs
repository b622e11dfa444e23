//! Explicit probability tables over finite supports, and the exact distances
//! between them that every other module is checked against.

use std::collections::HashMap;
use std::hash::Hash;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::estimator::{EvalApproximator, Sampler};

/// A point of `Σⁿ` for a finite alphabet `Σ = {0, …, k-1}`.
pub type Assignment = Vec<usize>;

const SUM_TOLERANCE: f64 = 1e-12;

/// A probability table over an enumerable support.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution<T = Assignment> {
    support: Vec<T>,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
    index: HashMap<T, usize>,
}

impl<T: Clone + Eq + Hash> DiscreteDistribution<T> {
    /// Builds a distribution whose masses already sum to one.
    pub fn new(support: Vec<T>, mass: Vec<f64>) -> Result<Self> {
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return param(format!("masses sum to {total}, expected 1"));
        }
        Self::build(support, mass)
    }

    /// Builds a distribution from nonnegative weights, normalizing them.
    pub fn from_weights(support: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return param(format!("weights must have a positive finite sum, got {total}"));
        }
        let mass = weights.into_iter().map(|w| w / total).collect();
        Self::build(support, mass)
    }

    fn build(support: Vec<T>, mass: Vec<f64>) -> Result<Self> {
        if support.len() != mass.len() {
            return param(format!(
                "support has {} entries but {} masses were given",
                support.len(),
                mass.len()
            ));
        }
        if support.is_empty() {
            return param("empty support");
        }
        if let Some(bad) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return param(format!("negative or non-finite mass {bad}"));
        }
        let mut index = HashMap::with_capacity(support.len());
        for (i, x) in support.iter().enumerate() {
            if index.insert(x.clone(), i).is_some() {
                return param("support entries must be distinct");
            }
        }
        let mut acc = 0.0;
        let cumulative = mass
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(Self {
            support,
            mass,
            cumulative,
            index,
        })
    }

    /// Point mass at `x`.
    pub fn point(x: T) -> Self {
        Self::build(vec![x], vec![1.0]).expect("single atom is valid")
    }

    /// Uniform over the given (distinct) items.
    pub fn uniform(support: Vec<T>) -> Result<Self> {
        let k = support.len();
        Self::from_weights(support, vec![1.0; k])
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// Mass at `x`; zero outside the support.
    pub fn prob(&self, x: &T) -> f64 {
        self.index.get(x).map_or(0.0, |&i| self.mass[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().zip(self.mass.iter().copied())
    }

    /// Inverse-CDF draw.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> &T {
        let total = *self.cumulative.last().expect("nonempty");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.support[i.min(self.support.len() - 1)]
    }
}

impl DiscreteDistribution<usize> {
    /// Distribution over item indices `0..mass.len()`.
    pub fn over_items(mass: Vec<f64>) -> Result<Self> {
        Self::new((0..mass.len()).collect(), mass)
    }
}

impl<T: Clone + Eq + Hash> Sampler<T> for DiscreteDistribution<T> {
    fn draw(&self, rng: &mut dyn RngCore) -> T {
        DiscreteDistribution::draw(self, rng).clone()
    }
}

/// Exact evaluation of a known table: a (0,0)-EVAL approximator.
impl<T: Clone + Eq + Hash> EvalApproximator<T> for DiscreteDistribution<T> {
    fn eval(&self, x: &T) -> f64 {
        self.prob(x)
    }
}

/// `½ Σ_x |p(x) − q(x)|` over the union of the two supports.
pub fn exact_tv<T: Clone + Eq + Hash>(p: &DiscreteDistribution<T>, q: &DiscreteDistribution<T>) -> f64 {
    let mut sum = 0.0;
    for (x, px) in p.iter() {
        sum += (px - q.prob(x)).abs();
    }
    for (x, qx) in q.iter() {
        if !p.index.contains_key(x) {
            sum += qx;
        }
    }
    (0.5 * sum).clamp(0.0, 1.0)
}

/// `Σ_{p(x)>0} p(x) ln(p(x)/q(x))`; `+∞` when `q` misses mass of `p`.
pub fn exact_kl<T: Clone + Eq + Hash>(p: &DiscreteDistribution<T>, q: &DiscreteDistribution<T>) -> f64 {
    kl_terms(p.iter().map(|(x, px)| (px, q.prob(x))))
}

/// KL over aligned `(p, q)` mass pairs.
pub(crate) fn kl_terms(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut sum = 0.0;
    for (px, qx) in pairs {
        if px > 0.0 {
            if qx <= 0.0 {
                return f64::INFINITY;
            }
            sum += px * (px / qx).ln();
        }
    }
    sum.max(0.0)
}

/// Total variation between two pmfs listed over the same index set.
pub fn tv_dense(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "pmfs over different index sets");
    let sum: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    (0.5 * sum).clamp(0.0, 1.0)
}

/// KL between two pmfs listed over the same index set.
pub fn kl_dense(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "pmfs over different index sets");
    kl_terms(p.iter().copied().zip(q.iter().copied()))
}

/// Laplace-corrected empirical distribution: item `i` gets `(z_i + 1)/(z + k)`.
pub fn laplace_estimate(counts: &[u64]) -> Result<DiscreteDistribution<usize>> {
    if counts.is_empty() {
        return param("laplace_estimate needs at least one item");
    }
    let mass = laplace_row(counts);
    DiscreteDistribution::over_items(mass)
}

pub(crate) fn laplace_row(counts: &[u64]) -> Vec<f64> {
    let z: u64 = counts.iter().sum();
    let denom = (z + counts.len() as u64) as f64;
    counts.iter().map(|&c| (c + 1) as f64 / denom).collect()
}

/// Occurrence counts serialized alongside empirical tables.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Counts(pub Vec<u64>);
