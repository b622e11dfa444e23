//! Additive estimation of total-variation distance between structured
//! high-dimensional distributions.
//!
//! The estimator in [`estimator`] needs only sample access to one
//! distribution and approximate point evaluation of both. The family modules
//! supply those two ingredients, usually by learning a model from samples:
//!
//! * [`bayesnet`]: Bayesian networks on a known DAG,
//! * [`ising`]: Ising models (ferromagnetic for the learned pipeline),
//! * [`gaussian`]: multivariate Gaussians,
//! * [`causal`]: interventional distributions of causal Bayesian networks.
//!
//! Every family ships exact brute-force oracles for desk-scale verification.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bayesnet;
pub mod causal;
pub mod calibration;
pub mod discrete;
pub mod enumerate;
pub mod error;
pub mod ising;
pub mod estimator;
pub mod gaussian;
pub mod limits;
pub mod rng;

pub use discrete::{exact_kl, exact_tv, laplace_estimate, Assignment, DiscreteDistribution};
pub use error::{Error, Result};
pub use estimator::{
    amplify_median, boost_learner, estimate_tv, required_samples, BoostOutcome, EvalApproximator, Sampler,
    TvEstimate, WithSlack,
};

pub use bayesnet::{BayesNet, Dag};
pub use causal::{Admg, Cbn, Intervention};
pub use gaussian::GaussianParams;
pub use ising::{IsingModel, SpinHistogram, Spins};
