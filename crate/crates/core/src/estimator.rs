//! Sample-and-evaluate distance approximation.
//!
//! Draw `x ~ P`, evaluate both approximators at `x`, and average
//! `c(x) = 1{α > β'}·(1 − β'/α)` where `α ≈ P(x)` and `β' ≈ Q(x)`. With
//! `(β, γ)`-approximators the mean is within `2γ/(1−γ) + 3β + ε` of `dTV(P, Q)`
//! with probability `1 − δ`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_open, param, Result};
use crate::rng;

/// Point evaluation of an approximation to a probability mass (or density).
///
/// The contract: some distribution `P̂` with `dTV(P, P̂) ≤ beta()` satisfies
/// `(1−γ)·P̂(x) ≤ eval(x) ≤ (1+γ)·P̂(x)` everywhere, `γ = gamma()`.
pub trait EvalApproximator<X: ?Sized> {
    fn eval(&self, x: &X) -> f64;

    /// Natural log of [`eval`](Self::eval); override when the mass underflows.
    fn ln_eval(&self, x: &X) -> f64 {
        self.eval(x).ln()
    }

    fn beta(&self) -> f64 {
        0.0
    }

    fn gamma(&self) -> f64 {
        0.0
    }
}

/// Sample access to a distribution.
pub trait Sampler<X> {
    fn draw(&self, rng: &mut dyn RngCore) -> X;

    fn description(&self) -> String {
        std::any::type_name::<Self>().to_string()
    }
}

impl<X: ?Sized, E: EvalApproximator<X> + ?Sized> EvalApproximator<X> for &E {
    fn eval(&self, x: &X) -> f64 {
        (**self).eval(x)
    }
    fn ln_eval(&self, x: &X) -> f64 {
        (**self).ln_eval(x)
    }
    fn beta(&self) -> f64 {
        (**self).beta()
    }
    fn gamma(&self) -> f64 {
        (**self).gamma()
    }
}

impl<X, S: Sampler<X> + ?Sized> Sampler<X> for &S {
    fn draw(&self, rng: &mut dyn RngCore) -> X {
        (**self).draw(rng)
    }
    fn description(&self) -> String {
        (**self).description()
    }
}

/// Attaches declared `(β, γ)` slack to an evaluator.
#[derive(Debug, Clone)]
pub struct WithSlack<E> {
    pub inner: E,
    pub beta: f64,
    pub gamma: f64,
}

impl<E> WithSlack<E> {
    pub fn new(inner: E, beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return param(format!("beta must lie in [0, 1], got {beta}"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return param(format!("gamma must lie in [0, 1), got {gamma}"));
        }
        Ok(Self { inner, beta, gamma })
    }
}

impl<X: ?Sized, E: EvalApproximator<X>> EvalApproximator<X> for WithSlack<E> {
    fn eval(&self, x: &X) -> f64 {
        self.inner.eval(x)
    }
    fn ln_eval(&self, x: &X) -> f64 {
        self.inner.ln_eval(x)
    }
    fn beta(&self) -> f64 {
        self.beta
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Evaluator backed by a closure returning the log-mass.
pub struct LnFnEval<F> {
    pub ln_mass: F,
    pub beta: f64,
    pub gamma: f64,
}

impl<X: ?Sized, F: Fn(&X) -> f64> EvalApproximator<X> for LnFnEval<F> {
    fn eval(&self, x: &X) -> f64 {
        (self.ln_mass)(x).exp()
    }
    fn ln_eval(&self, x: &X) -> f64 {
        (self.ln_mass)(x)
    }
    fn beta(&self) -> f64 {
        self.beta
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Sampler backed by a closure.
pub struct FnSampler<F> {
    pub draw: F,
    pub description: String,
}

impl<X, F: Fn(&mut dyn RngCore) -> X> Sampler<X> for FnSampler<F> {
    fn draw(&self, rng: &mut dyn RngCore) -> X {
        (self.draw)(rng)
    }
    fn description(&self) -> String {
        self.description.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub value: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub samples_used: usize,
    /// The analytic `2γ/(1−γ) + 3β` term contributed by approximate evaluators.
    pub extra_error: f64,
}

impl TvEstimate {
    /// Total additive error guaranteed with probability `1 − delta`.
    pub fn error_bound(&self) -> f64 {
        self.extra_error + self.epsilon
    }
}

/// Hoeffding budget for a `[0,1]`-valued mean: `ceil(ln(2/δ) / (2ε²))`.
pub fn required_samples(epsilon: f64, delta: f64) -> Result<usize> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    Ok(((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as usize)
}

/// `2γ/(1−γ) + 3β` for the worse of the two approximators.
pub fn extra_error(beta_p: f64, gamma_p: f64, beta_q: f64, gamma_q: f64) -> f64 {
    let beta = beta_p.max(beta_q);
    let gamma = gamma_p.max(gamma_q);
    2.0 * gamma / (1.0 - gamma) + 3.0 * beta
}

/// The per-sample term `1{α > β'}·(1 − β'/α)` from log-masses. Always in `[0, 1]`.
pub fn tv_term(ln_p: f64, ln_q: f64) -> f64 {
    if ln_p == f64::NEG_INFINITY || ln_p.is_nan() {
        return 0.0;
    }
    if ln_p > ln_q || ln_q.is_nan() {
        let ratio = if ln_q.is_nan() { 0.0 } else { (ln_q - ln_p).exp() };
        (1.0 - ratio).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn term<X: ?Sized>(x: &X, eval_p: &(impl EvalApproximator<X> + ?Sized), eval_q: &(impl EvalApproximator<X> + ?Sized)) -> f64 {
    tv_term(eval_p.ln_eval(x), eval_q.ln_eval(x))
}

/// Estimates `dTV(P, Q)` from `required_samples(epsilon, delta)` draws of `P`.
pub fn estimate_tv<X>(
    sampler_p: &(impl Sampler<X> + ?Sized),
    eval_p: &(impl EvalApproximator<X> + ?Sized),
    eval_q: &(impl EvalApproximator<X> + ?Sized),
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<TvEstimate> {
    let t = required_samples(epsilon, delta)?;
    let mut sum = 0.0;
    for _ in 0..t {
        let x = sampler_p.draw(rng);
        sum += term(&x, eval_p, eval_q);
    }
    Ok(finish(sum, t, epsilon, delta, eval_p, eval_q))
}

/// Same estimator over pre-drawn points of `P` (held-out samples).
///
/// Uses the first `required_samples(epsilon, delta)` points and fails if
/// fewer are available.
pub fn estimate_tv_from_draws<X>(
    draws: &[X],
    eval_p: &(impl EvalApproximator<X> + ?Sized),
    eval_q: &(impl EvalApproximator<X> + ?Sized),
    epsilon: f64,
    delta: f64,
) -> Result<TvEstimate> {
    let t = required_samples(epsilon, delta)?;
    if draws.len() < t {
        return Err(crate::Error::InsufficientSamples {
            what: "distance estimation draws",
            required: t,
            got: draws.len(),
        });
    }
    let sum: f64 = draws[..t].iter().map(|x| term(x, eval_p, eval_q)).sum();
    Ok(finish(sum, t, epsilon, delta, eval_p, eval_q))
}

const CHUNK: usize = 1024;

/// Multi-threaded [`estimate_tv`].
///
/// Draws are cut into fixed chunks of 1024, chunk `c` using the stream
/// `(seed, "estimate_tv", c)`, and partial sums are added in chunk order, so
/// the result is independent of `workers`.
pub fn estimate_tv_parallel<X, S, P, Q>(
    sampler_p: &S,
    eval_p: &P,
    eval_q: &Q,
    epsilon: f64,
    delta: f64,
    seed: u64,
    workers: usize,
) -> Result<TvEstimate>
where
    S: Sampler<X> + Sync + ?Sized,
    P: EvalApproximator<X> + Sync + ?Sized,
    Q: EvalApproximator<X> + Sync + ?Sized,
{
    let t = required_samples(epsilon, delta)?;
    let chunks = t.div_ceil(CHUNK);
    let workers = workers.clamp(1, chunks.max(1));
    let mut partial = vec![0.0; chunks];
    std::thread::scope(|scope| {
        for (w, slots) in partial.chunks_mut(chunks.div_ceil(workers)).enumerate() {
            let first = w * chunks.div_ceil(workers);
            scope.spawn(move || {
                for (offset, slot) in slots.iter_mut().enumerate() {
                    let c = first + offset;
                    let mut rng = rng::indexed_stream(seed, "estimate_tv", c as u64);
                    let len = CHUNK.min(t - c * CHUNK);
                    *slot = (0..len)
                        .map(|_| {
                            let x = sampler_p.draw(&mut rng);
                            term(&x, eval_p, eval_q)
                        })
                        .sum();
                }
            });
        }
    });
    let sum = partial.iter().sum();
    Ok(finish(sum, t, epsilon, delta, eval_p, eval_q))
}

fn finish<X: ?Sized>(
    sum: f64,
    t: usize,
    epsilon: f64,
    delta: f64,
    eval_p: &(impl EvalApproximator<X> + ?Sized),
    eval_q: &(impl EvalApproximator<X> + ?Sized),
) -> TvEstimate {
    TvEstimate {
        value: (sum / t as f64).clamp(0.0, 1.0),
        epsilon,
        delta,
        samples_used: t,
        extra_error: extra_error(eval_p.beta(), eval_p.gamma(), eval_q.beta(), eval_q.gamma()),
    }
}

/// Number of runs used by [`amplify_median`]: `ceil(18 ln(1/δ))`.
pub fn median_repetitions(delta: f64) -> Result<usize> {
    check_unit_open("delta", delta)?;
    Ok(((18.0 * (1.0 / delta).ln()).ceil() as usize).max(1))
}

/// Median of `ceil(18 ln(1/δ))` independent runs of a 2/3-reliable estimator.
pub fn amplify_median(mut run: impl FnMut(&mut dyn RngCore) -> f64, delta: f64, rng: &mut dyn RngCore) -> Result<f64> {
    let reps = median_repetitions(delta)?;
    let mut values: Vec<f64> = (0..reps).map(|_| run(rng)).collect();
    values.sort_by(f64::total_cmp);
    Ok(values[(reps - 1) / 2])
}

/// Learner repetitions for the boosting meta-learner: `ceil(324 ln(2/δ))`.
pub fn boost_repetitions(delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return param(format!("delta must be positive, got {delta}"));
    }
    let r = (324.0 * (2.0 / delta).ln()).ceil();
    if !(r >= 2.0) {
        return param(format!("delta = {delta} leaves fewer than two repetitions"));
    }
    check_unit_open("delta", delta)?;
    Ok(r as usize)
}

#[derive(Debug, Clone)]
pub struct BoostOutcome<M> {
    pub model: M,
    pub winner: usize,
    /// `count_i`: how many other repetitions were estimated close to `i`.
    pub counts: Vec<usize>,
    pub repetitions: usize,
}

/// Pairwise-vote selection over candidate models.
///
/// Every pair is compared at accuracy `ε/4` and failure probability
/// `δ/(2R²)`; a pair estimated within `3ε/4` votes for both members. The
/// candidate with the most votes wins, lowest index on ties.
pub fn select_by_pairwise_votes<M>(
    models: &[M],
    mut dist: impl FnMut(&M, &M, f64, f64, &mut dyn RngCore) -> f64,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<(usize, Vec<usize>)> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    let r = models.len();
    if r == 0 {
        return param("no candidate models");
    }
    let accuracy = epsilon / 4.0;
    let failure = delta / (2.0 * (r * r) as f64);
    let threshold = 3.0 * accuracy;
    let mut counts = vec![0usize; r];
    for i in 0..r {
        for j in (i + 1)..r {
            if dist(&models[i], &models[j], accuracy, failure, rng) <= threshold {
                counts[i] += 1;
                counts[j] += 1;
            }
        }
    }
    let mut winner = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[winner] {
            winner = i;
        }
    }
    Ok((winner, counts))
}

/// Boosts a 3/4-reliable learner to a `1 − δ` reliable one.
///
/// Runs `R = ceil(324 ln(2/δ))` repetitions of `learner`, each on
/// `samples_per_repetition` fresh draws, then keeps the repetition that the
/// most other repetitions agree with.
pub fn boost_learner<X, M>(
    mut learner: impl FnMut(&[X]) -> M,
    dist: impl FnMut(&M, &M, f64, f64, &mut dyn RngCore) -> f64,
    source: &(impl Sampler<X> + ?Sized),
    samples_per_repetition: usize,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<BoostOutcome<M>> {
    check_unit_open("epsilon", epsilon)?;
    let repetitions = boost_repetitions(delta)?;
    let mut models = Vec::with_capacity(repetitions);
    let mut batch = Vec::with_capacity(samples_per_repetition);
    for _ in 0..repetitions {
        batch.clear();
        batch.extend((0..samples_per_repetition).map(|_| source.draw(rng)));
        models.push(learner(&batch));
    }
    let (winner, counts) = select_by_pairwise_votes(&models, dist, epsilon, delta, rng)?;
    let model = models.swap_remove(winner);
    Ok(BoostOutcome {
        model,
        winner,
        counts,
        repetitions,
    })
}
