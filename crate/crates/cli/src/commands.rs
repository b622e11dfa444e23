use std::time::Instant;

use log::warn;
use rand::RngCore;

use tvdist::bayesnet::{bn_recommended_m, estimate_tv_bns, kl_between_bns, learn_bn, learning_threshold};
use tvdist::causal::{estimate_tv_interventional, interventional_distribution};
use tvdist::discrete::tv_dense;
use tvdist::estimator::{boost_repetitions, LnFnEval};
use tvdist::gaussian::{
    estimate_tv_gaussians, gaussian_learning_budget, learn_gaussian, tv_between_gaussians_params,
    tv_equal_variance_1d,
};
use tvdist::ising::{
    estimate_tv_ising, estimate_tv_ising_to_uniform, exact_partition, exact_tv_ising, ising_error_split,
    ising_learning_budget, ising_sample, learn_ising, SamplingMode,
};
use tvdist::limits::{self, ISING_ENUM_BITS};
use tvdist::rng::stream;
use tvdist::{
    boost_learner, estimate_tv, exact_tv, required_samples, BayesNet, Cbn, Dag, GaussianParams, Intervention,
    IsingModel, SpinHistogram, TvEstimate,
};

use crate::error::{CliError, CliResult, Kind};
use crate::model::{same_family, Family, Model};
use crate::report::{Record, Report};
use crate::samples::{Rows, SampleFile};

/// Glauber settings used when a model is too large for exact sampling.
pub const GLAUBER_BURN_IN: usize = 1000;
pub const GLAUBER_THINNING: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub n: usize,
    pub d: usize,
    pub alphabet: usize,
    pub width: f64,
    pub theta: f64,
    pub hidden: usize,
}

pub fn gen_model(family: Family, shape: Shape, seed: u64) -> CliResult<Model> {
    let Shape { n, d, alphabet, width, theta, hidden } = shape;
    if n == 0 {
        return Err(CliError::invalid("--n must be at least 1"));
    }
    if matches!(family, Family::Bayesnet | Family::Causal) && d >= n {
        return Err(CliError::invalid(format!("--d must be below --n ({d} >= {n})")));
    }
    let mut rng = stream(seed, &format!("gen-model/{}", family.name()));
    Ok(match family {
        Family::Bayesnet => {
            let dag = Dag::random(n, d, &mut rng);
            Model::BayesNet(BayesNet::random(dag, alphabet, &mut rng)?)
        }
        Family::Ising => Model::Ising(IsingModel::random_ferromagnetic(n, width, theta, &mut rng)?),
        Family::Gaussian => Model::Gaussian(GaussianParams::random(n, &mut rng)?),
        Family::Causal => Model::Causal(Cbn::random(n, d, hidden, alphabet, &mut rng)?),
    })
}

/// `NAME=VALUE` or `INDEX=VALUE`.
pub fn parse_intervention(cbn: &Cbn, spec: &str) -> CliResult<Intervention> {
    let (node, value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::invalid(format!("intervention {spec:?} is not NAME=VALUE")))?;
    let node = cbn
        .node_index(node)
        .or_else(|| node.parse().ok().filter(|&i: &usize| i < cbn.n()))
        .ok_or_else(|| CliError::invalid(format!("unknown node {node:?}")))?;
    let value = value.parse().map_err(|_| CliError::invalid(format!("bad intervention value {value:?}")))?;
    let iv = Intervention { node, value };
    cbn.check_intervention(iv)?;
    Ok(iv)
}

fn intervention_for(model: &Model, spec: Option<&str>) -> CliResult<Option<Intervention>> {
    match (model, spec) {
        (Model::Causal(c), Some(s)) => Ok(Some(parse_intervention(c, s)?)),
        (Model::Causal(_), None) => Err(CliError::invalid("causal models need --intervene NAME=VALUE")),
        (_, Some(_)) => Err(CliError::invalid("--intervene applies only to causal models")),
        (_, None) => Ok(None),
    }
}

fn ising_enumerable(m: &IsingModel) -> bool {
    m.n() as u32 <= limits::limit(ISING_ENUM_BITS)
}

pub fn sample(model: &Model, count: usize, intervene: Option<&str>, seed: u64) -> CliResult<Rows> {
    let iv = intervention_for(model, intervene)?;
    let mut rng = stream(seed, "sample");
    Ok(match model {
        Model::BayesNet(bn) => Rows::Discrete((0..count).map(|_| bn.sample(&mut rng)).collect()),
        Model::Ising(m) => {
            let mode = if ising_enumerable(m) {
                SamplingMode::Exact
            } else {
                warn!(
                    "{} spins exceed the enumeration guard; using Glauber dynamics (burn-in {GLAUBER_BURN_IN}, thinning {GLAUBER_THINNING})",
                    m.n()
                );
                SamplingMode::Glauber { burn_in: GLAUBER_BURN_IN, thinning: GLAUBER_THINNING }
            };
            Rows::Spins(ising_sample(m, mode, count, &mut rng)?)
        }
        Model::Gaussian(g) => Rows::Real((0..count).map(|_| g.sample(&mut rng)).collect()),
        Model::Causal(c) => Rows::Discrete((0..count).map(|_| c.sample(iv, &mut rng)).collect()),
    })
}

fn discrete(rows: &Rows) -> CliResult<&[Vec<usize>]> {
    match rows {
        Rows::Discrete(r) => Ok(r),
        _ => Err(CliError::new(Kind::FamilyMismatch, "expected rows of discrete symbols")),
    }
}

fn histogram(rows: &Rows) -> CliResult<SpinHistogram> {
    match rows {
        Rows::Spins(r) => Ok(SpinHistogram::from_rows(r)?),
        _ => Err(CliError::new(Kind::FamilyMismatch, "expected rows of ±1 spins")),
    }
}

fn reals(rows: &Rows) -> CliResult<&[Vec<f64>]> {
    match rows {
        Rows::Real(r) => Ok(r),
        _ => Err(CliError::new(Kind::FamilyMismatch, "expected rows of real numbers")),
    }
}

fn structure(model: Option<&Model>) -> CliResult<&BayesNet> {
    match model {
        Some(Model::BayesNet(bn)) => Ok(bn),
        Some(other) => Err(CliError::new(
            Kind::FamilyMismatch,
            format!("--structure must be a bayesnet model, got {}", other.family().name()),
        )),
        None => Err(CliError::invalid("bayesnet samples need --structure MODEL for the DAG")),
    }
}

pub fn learn(samples: &SampleFile, structure_model: Option<&Model>, width: f64, epsilon: f64, delta: f64) -> CliResult<Model> {
    let family = same_family(&[samples.family, structure_model.map(Model::family)])?;
    Ok(match family {
        Family::Bayesnet => {
            let bn = structure(structure_model)?;
            let (dag, k) = (bn.dag(), bn.alphabet());
            let t = learning_threshold(dag.n(), dag.in_degree(), k);
            Model::BayesNet(learn_bn(discrete(&samples.rows)?, dag, k, t)?)
        }
        Family::Ising => Model::Ising(learn_ising(&histogram(&samples.rows)?, width, epsilon, delta)?),
        Family::Gaussian => Model::Gaussian(learn_gaussian(reals(&samples.rows)?)?),
        Family::Causal => {
            return Err(CliError::invalid("learning causal networks from samples is not supported"));
        }
    })
}

/// Composite Simpson rule; used only for the 1-D Gaussian oracle.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(lo) + f(hi) + inner) * h / 3.0
}

fn gaussian_oracle(p: &GaussianParams, q: &GaussianParams) -> Option<f64> {
    if p.n() != q.n() {
        return None;
    }
    if (p.sigma() - q.sigma()).amax() <= 1e-12 {
        // Shared covariance: a 1-D problem along the Mahalanobis direction.
        let diff = p.mu() - q.mu();
        let z = p.cholesky_factor().solve_lower_triangular(&diff)?;
        return Some(tv_equal_variance_1d(0.0, z.norm(), 1.0));
    }
    if p.n() == 1 {
        let (sp, sq) = (p.sigma()[(0, 0)].sqrt(), q.sigma()[(0, 0)].sqrt());
        let s = sp.max(sq);
        let lo = p.mu()[0].min(q.mu()[0]) - 15.0 * s;
        let hi = p.mu()[0].max(q.mu()[0]) + 15.0 * s;
        let f = |x: f64| (p.logpdf(&[x]).unwrap().exp() - q.logpdf(&[x]).unwrap().exp()).abs();
        return Some(0.5 * simpson(f, lo, hi, 200_000));
    }
    None
}

/// Exact distance where an oracle exists; size-guard errors propagate.
pub fn exact_distance(p: &Model, q: &Model, iv: Option<Intervention>) -> CliResult<f64> {
    same_family(&[Some(p.family()), Some(q.family())])?;
    if p.n() != q.n() {
        return Err(CliError::invalid(format!("models have {} and {} variables", p.n(), q.n())));
    }
    match (p, q) {
        (Model::BayesNet(a), Model::BayesNet(b)) => Ok(exact_tv(&a.joint()?, &b.joint()?)),
        (Model::Ising(a), Model::Ising(b)) => Ok(exact_tv_ising(a, b)?),
        (Model::Gaussian(a), Model::Gaussian(b)) => gaussian_oracle(a, b).ok_or_else(|| {
            CliError::invalid("no exact oracle for Gaussians with different covariances in more than one dimension")
        }),
        (Model::Causal(a), Model::Causal(b)) => {
            let iv = iv.ok_or_else(|| CliError::invalid("causal models need --intervene NAME=VALUE"))?;
            Ok(exact_tv(&interventional_distribution(a, iv)?, &interventional_distribution(b, iv)?))
        }
        _ => unreachable!("families checked above"),
    }
}

fn oracle_if_available(p: &Model, q: &Model, iv: Option<Intervention>) -> Option<f64> {
    exact_distance(p, q, iv).ok()
}

fn ising_eval(m: &IsingModel, ln_z: f64) -> LnFnEval<impl Fn(&Vec<i8>) -> f64 + '_> {
    LnFnEval {
        ln_mass: move |x: &Vec<i8>| m.log_numerator(x).map_or(f64::NEG_INFINITY, |v| v - ln_z),
        beta: 0.0,
        gamma: 0.0,
    }
}

/// Estimator with exact evaluators of both models, sampling from `p`.
pub fn estimate_parameter_mode(
    p: &Model,
    q: &Model,
    iv: Option<Intervention>,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> CliResult<TvEstimate> {
    same_family(&[Some(p.family()), Some(q.family())])?;
    if p.n() != q.n() {
        return Err(CliError::invalid(format!("models have {} and {} variables", p.n(), q.n())));
    }
    Ok(match (p, q) {
        (Model::BayesNet(a), Model::BayesNet(b)) => {
            if a.alphabet() != b.alphabet() {
                return Err(CliError::invalid("bayes nets use different alphabets"));
            }
            estimate_tv(a, a, b, epsilon, delta, rng)?
        }
        (Model::Ising(a), Model::Ising(b)) => {
            let sampler = tvdist::ising::ExactIsingSampler::new(a)?;
            let (za, zb) = (exact_partition(a)?.ln_value, exact_partition(b)?.ln_value);
            estimate_tv(&sampler, &ising_eval(a, za), &ising_eval(b, zb), epsilon, delta, rng)?
        }
        (Model::Gaussian(a), Model::Gaussian(b)) => tv_between_gaussians_params(a, b, epsilon, delta, rng)?,
        (Model::Causal(a), Model::Causal(b)) => {
            let iv = iv.ok_or_else(|| CliError::invalid("causal models need --intervene NAME=VALUE"))?;
            estimate_tv_interventional(a, b, iv, epsilon, delta, rng)?
        }
        _ => unreachable!("families checked above"),
    })
}

pub struct TvInputs<'a> {
    pub family: Option<Family>,
    pub model: Option<&'a Model>,
    pub model2: Option<&'a Model>,
    pub samples: Option<&'a SampleFile>,
    pub samples2: Option<&'a SampleFile>,
    pub structure: Option<&'a Model>,
    pub structure2: Option<&'a Model>,
    pub intervene: Option<&'a str>,
    pub width: f64,
}

pub struct TvSettings {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub timing: bool,
}

pub fn estimate_tv_command(inputs: &TvInputs<'_>, s: &TvSettings) -> CliResult<Report> {
    let started = Instant::now();
    let mut rng = stream(s.seed, "estimate-tv");
    let (mode, family, n, d, estimate, oracle) = match (inputs.model, inputs.model2, inputs.samples) {
        (Some(p), Some(q), None) => {
            let family = same_family(&[inputs.family, Some(p.family()), Some(q.family())])?;
            let iv = intervention_for(p, inputs.intervene)?;
            let est = estimate_parameter_mode(p, q, iv, s.epsilon, s.delta, &mut rng)?;
            ("parameter", family, p.n(), p.shape(), est, oracle_if_available(p, q, iv))
        }
        (None, None, Some(sp)) => {
            let family = same_family(&[
                inputs.family,
                sp.family,
                inputs.samples2.and_then(|f| f.family),
                inputs.structure.map(|_| Family::Bayesnet),
            ])?;
            let (est, n, d) = estimate_sample_mode(family, inputs, s, &mut rng)?;
            ("sample", family, n, d, est, None)
        }
        _ => {
            return Err(CliError::invalid(
                "give either --model and --model2 (parameter mode) or --samples [--samples2] (sample mode)",
            ));
        }
    };
    let wall = s.timing.then(|| started.elapsed().as_secs_f64() * 1e3);
    let record = Record {
        family: family.name().into(),
        n,
        d,
        epsilon: s.epsilon,
        samples_used: Some(estimate.samples_used),
        estimate: Some(estimate.value),
        oracle_value: oracle,
        wall_time_ms: wall,
        seed: s.seed,
    };
    Ok(Report::new()
        .field("family", family.name())
        .field("mode", mode)
        .field("n", n)
        .field("estimate", estimate.value)
        .field("extra_error", estimate.extra_error)
        .field("error_bound", estimate.error_bound())
        .field("samples_used", estimate.samples_used)
        .field("epsilon", s.epsilon)
        .field("delta", s.delta)
        .field("seed", s.seed)
        .opt("oracle_value", oracle)
        .opt("abs_error", record.abs_error())
        .opt("wall_time_ms", wall)
        .with_record(record))
}

fn estimate_sample_mode(
    family: Family,
    inputs: &TvInputs<'_>,
    s: &TvSettings,
    rng: &mut dyn RngCore,
) -> CliResult<(TvEstimate, usize, Option<f64>)> {
    let sp = inputs.samples.expect("sample mode has P samples");
    let need_q = || inputs.samples2.ok_or_else(|| CliError::invalid("sample mode for this family needs --samples2"));
    Ok(match family {
        Family::Bayesnet => {
            let bp = structure(inputs.structure)?;
            let bq = match inputs.structure2 {
                Some(m) => structure(Some(m))?,
                None => bp,
            };
            if bp.alphabet() != bq.alphabet() {
                return Err(CliError::invalid("structures use different alphabets"));
            }
            let (p_rows, q_rows) = (discrete(&sp.rows)?, discrete(&need_q()?.rows)?);
            let report = estimate_tv_bns(p_rows, q_rows, bp.dag(), bq.dag(), bp.alphabet(), s.epsilon, s.delta)?;
            let mut est = report.estimate;
            est.samples_used = p_rows.len() + q_rows.len();
            (est, bp.n(), Some(bp.dag().in_degree() as f64))
        }
        Family::Ising => {
            let hp = histogram(&sp.rows)?;
            let (report, used) = match inputs.samples2 {
                Some(f) => {
                    let hq = histogram(&f.rows)?;
                    let used = (hp.total() + hq.total()) as usize;
                    (estimate_tv_ising(&hp, &hq, inputs.width, s.epsilon, s.delta, rng)?, used)
                }
                None => (estimate_tv_ising_to_uniform(&hp, inputs.width, s.epsilon, s.delta, rng)?, hp.total() as usize),
            };
            let mut est = report.estimate;
            est.samples_used = used;
            (est, hp.n(), Some(inputs.width))
        }
        Family::Gaussian => {
            let (p_rows, q_rows) = (reals(&sp.rows)?, reals(&need_q()?.rows)?);
            let report = estimate_tv_gaussians(p_rows, q_rows, s.epsilon, s.delta)?;
            let mut est = report.estimate;
            est.samples_used = p_rows.len() + q_rows.len();
            (est, sp.rows.width(), None)
        }
        Family::Causal => {
            return Err(CliError::invalid("causal distances need model files (parameter mode)"));
        }
    })
}

pub fn exact_tv_command(p: &Model, q: &Model, intervene: Option<&str>, family: Option<Family>) -> CliResult<Report> {
    let family = same_family(&[family, Some(p.family()), Some(q.family())])?;
    let iv = intervention_for(p, intervene)?;
    let value = exact_distance(p, q, iv)?;
    Ok(Report::new().field("family", family.name()).field("n", p.n()).field("exact_tv", value))
}

pub fn estimate_kl_command(p: &Model, q: &Model) -> CliResult<Report> {
    same_family(&[Some(p.family()), Some(q.family())])?;
    let (Model::BayesNet(a), Model::BayesNet(b)) = (p, q) else {
        return Err(CliError::invalid("estimate-kl supports bayesnet models on a shared DAG"));
    };
    let kl = kl_between_bns(a, b)?;
    Ok(Report::new()
        .field("family", "bayesnet")
        .field("n", a.n())
        .field("kl", kl.value)
        .field("std_error", kl.std_error)
        .field("method", if kl.exact { "exact" } else { "monte-carlo" }))
}

pub fn sample_size_command(family: Family, shape: Shape, epsilon: f64, delta: f64) -> CliResult<Report> {
    let Shape { n, d, alphabet, width, .. } = shape;
    let estimator = required_samples(epsilon, delta)?;
    let report = Report::new().field("family", family.name()).field("n", n).field("epsilon", epsilon).field("delta", delta);
    Ok(match family {
        Family::Bayesnet => {
            let b = bn_recommended_m(n, d, alphabet, epsilon, delta)?;
            report
                .field("d", d)
                .field("alphabet", alphabet)
                .field("constants", "explicit")
                .field("epsilon_kl", b.epsilon_kl)
                .field("encoded_n", b.encoded_n)
                .field("encoded_d", b.encoded_d)
                .field("learning_samples_per_repetition", b.per_repetition)
                .field("repetitions", b.repetitions)
                .field("learning_samples_total", b.total)
                .field("learning_threshold", learning_threshold(n, d, alphabet))
                .field("estimator_samples", estimator)
        }
        Family::Ising => {
            let c = tvdist::calibration::calibration().ising.learning_constant;
            let (beta, _, mc) = ising_error_split(epsilon)?;
            let learner = ising_learning_budget(n, width, epsilon, delta)?;
            let pipeline_learn = ising_learning_budget(n, width, beta, delta / 8.0)?;
            let holdout = required_samples(mc, delta / 2.0)?;
            report
                .field("width", width)
                .field("constants", format!("C = {c} (calibrated)"))
                .field("learning_samples", learner)
                .field("pipeline_samples_p", pipeline_learn + holdout)
                .field("pipeline_samples_q", pipeline_learn)
                .field("estimator_samples", estimator)
        }
        Family::Gaussian => {
            let c = tvdist::calibration::calibration().gaussian.learning_constant;
            let learner = gaussian_learning_budget(n, epsilon)?;
            let pipeline_learn = gaussian_learning_budget(n, epsilon / 4.0)?;
            let holdout = required_samples(epsilon / 4.0, delta / 2.0)?;
            report
                .field("constants", format!("C = {c} (calibrated)"))
                .field("learning_samples", learner)
                .field("pipeline_samples_p", pipeline_learn + holdout)
                .field("pipeline_samples_q", pipeline_learn)
                .field("estimator_samples", estimator)
        }
        Family::Causal => report.field("constants", "explicit").field("estimator_samples", estimator),
    })
}

/// Boosts a deliberately weak Bayes-net learner and reports how the chosen
/// repetition compares with the raw candidates.
pub fn boost_demo_command(model: &Model, per_repetition: usize, epsilon: f64, delta: f64, seed: u64) -> CliResult<Report> {
    let Model::BayesNet(truth) = model else {
        return Err(CliError::invalid("boost-demo takes a bayesnet model"));
    };
    if per_repetition == 0 {
        return Err(CliError::invalid("--count must be at least 1"));
    }
    let truth_joint = truth.joint()?;
    let (dag, k) = (truth.dag(), truth.alphabet());
    let t = learning_threshold(dag.n(), dag.in_degree(), k);
    let mut candidate_tv = Vec::new();
    let learner = |rows: &[Vec<usize>]| {
        let learned = learn_bn(rows, dag, k, t).expect("rows come from the model");
        let joint = learned.joint().expect("same size as the truth");
        candidate_tv.push(tv_dense(truth_joint.masses(), joint.masses()));
        joint.masses().to_vec()
    };
    let dist = |a: &Vec<f64>, b: &Vec<f64>, _: f64, _: f64, _: &mut dyn RngCore| tv_dense(a, b);
    let mut rng = stream(seed, "boost-demo");
    let outcome = boost_learner(learner, dist, truth, per_repetition, epsilon, delta, &mut rng)?;
    let winner_tv = tv_dense(truth_joint.masses(), &outcome.model);
    let mut sorted = candidate_tv.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    let good = candidate_tv.iter().filter(|&&v| v <= epsilon).count() as f64 / candidate_tv.len() as f64;
    debug_assert_eq!(outcome.repetitions, boost_repetitions(delta)?);
    Ok(Report::new()
        .field("family", "bayesnet")
        .field("n", truth.n())
        .field("samples_per_repetition", per_repetition)
        .field("repetitions", outcome.repetitions)
        .field("winner", outcome.winner)
        .field("winner_votes", outcome.counts[outcome.winner])
        .field("winner_tv", winner_tv)
        .field("median_candidate_tv", median)
        .field("candidates_within_epsilon", good)
        .field("epsilon", epsilon)
        .field("delta", delta)
        .field("seed", seed))
}
