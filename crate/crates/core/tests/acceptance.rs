//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! PASS/FAIL line; run with `--nocapture` (and `--test-threads=1` for tidy
//! output) to see them.

mod common;

use common::{exclusive, Criterion};

use tvdist::bayesnet::{binary_learning_samples, kl_between_bns, learn_bn, learning_threshold};
use tvdist::causal::{
    c_components, check_identifiability, estimate_tv_interventional, interventional_distribution, Admg, HiddenSource,
};
use tvdist::estimator::{boost_repetitions, FnSampler, LnFnEval};
use tvdist::gaussian::{estimate_tv_gaussians, gaussian_learning_budget, tv_between_gaussians_params};
use tvdist::ising::{estimate_partition, estimate_tv_ising, exact_partition, ising_error_split, ising_learning_budget, ExactIsingSampler};
use tvdist::rng::indexed_stream;
use tvdist::{
    boost_learner, estimate_tv, exact_kl, exact_tv, laplace_estimate, required_samples, BayesNet, Cbn, Dag,
    DiscreteDistribution, GaussianParams, Intervention, IsingModel,
};

use rand::{Rng, RngCore};

fn over_items(p: Vec<f64>) -> DiscreteDistribution<usize> {
    DiscreteDistribution::over_items(p).unwrap()
}

#[test]
fn criterion_01_core_estimator() {
    let _g = exclusive();
    let c = Criterion::start(1, "core estimator, exact evaluators", 5);
    let (eps, delta, trials) = (0.05, 0.1, 200u64);
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = indexed_stream(101, "acc1", trial);
        let p = common::random_simplex(16, &mut rng);
        let q = common::random_simplex(16, &mut rng);
        let truth = common::tv(&p, &q);
        let (dp, dq) = (over_items(p), over_items(q));
        let est = estimate_tv(&dp, &dp, &dq, eps, delta, &mut rng).unwrap();
        assert_eq!(est.samples_used, required_samples(eps, delta).unwrap());
        if (est.value - truth).abs() <= eps {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    c.finish(freq >= 0.85, format!("within {eps}: {freq:.3} of {trials} (need 0.85)"));
}

#[test]
fn criterion_02_error_budget() {
    let _g = exclusive();
    let c = Criterion::start(2, "error budget with (beta, gamma) evaluators", 10);
    let (beta, gamma, eps, delta, trials) = (0.02, 0.05, 0.03, 0.1, 200u64);
    let mut hits = 0;
    let mut bound = 0.0;
    for trial in 0..trials {
        let mut rng = indexed_stream(102, "acc2", trial);
        let p = common::random_simplex(16, &mut rng);
        let q = common::random_simplex(16, &mut rng);
        let truth = common::tv(&p, &q);
        // Mix toward the lightest atom: dTV(P, P̂) = λ·(1 − p_min) = beta exactly.
        let shift = |d: &[f64]| {
            let (imin, pmin) = d.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            let lambda = beta / (1.0 - pmin);
            let mixed: Vec<f64> = d.iter().enumerate().map(|(i, v)| (1.0 - lambda) * v + if i == imin { lambda } else { 0.0 }).collect();
            assert!((common::tv(d, &mixed) - beta).abs() < 1e-12);
            mixed
        };
        let (p_hat, q_hat) = (shift(&p), shift(&q));
        let wobble = |x: usize| if x.is_multiple_of(2) { 1.0 + gamma } else { 1.0 - gamma };
        let eval_p = LnFnEval { ln_mass: |x: &usize| (p_hat[*x] * wobble(*x)).ln(), beta, gamma };
        let eval_q = LnFnEval { ln_mass: |x: &usize| (q_hat[*x] * wobble(*x)).ln(), beta, gamma };
        let sampler = over_items(p);
        let est = estimate_tv(&sampler, &eval_p, &eval_q, eps, delta, &mut rng).unwrap();
        bound = est.error_bound();
        if (est.value - truth).abs() <= bound {
            hits += 1;
        }
    }
    let analytic = 2.0 * gamma / (1.0 - gamma) + 3.0 * beta + eps;
    assert!((bound - analytic).abs() < 1e-12);
    let freq = hits as f64 / trials as f64;
    c.finish(freq >= 0.85, format!("within {bound:.4}: {freq:.3} of {trials} (need 0.85)"));
}

#[test]
fn criterion_03_bayes_net_learning() {
    let _g = exclusive();
    let c = Criterion::start(3, "Bayes-net learning at explicit constants", 60);
    let (n, d, eps, trials) = (4usize, 1usize, 0.2, 200u64);
    let m = binary_learning_samples(n, d, eps);
    let t = learning_threshold(n, d, 2);
    let nf = (n * (1 << d)) as f64;
    assert_eq!(m, (24.0 * nf * nf.ln() / eps).ceil() as usize);
    assert_eq!(t, (12.0 * nf.ln()).ceil() as usize);
    let dag = Dag::chain(n);
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = indexed_stream(103, "acc3", trial);
        let truth = BayesNet::random(dag.clone(), 2, &mut rng).unwrap();
        let samples: Vec<_> = (0..m).map(|_| truth.sample(&mut rng)).collect();
        let learned = learn_bn(&samples, &dag, 2, t).unwrap();
        let kl = exact_kl(&truth.joint().unwrap(), &learned.joint().unwrap());
        if kl <= 6.0 * eps {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    c.finish(freq >= 0.70, format!("m = {m}, t = {t}, KL <= {}: {freq:.3} (need 0.70)", 6.0 * eps));
}

#[test]
fn criterion_04_kl_chain_rule() {
    let _g = exclusive();
    let c = Criterion::start(4, "KL chain rule equals joint KL", 10);
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let mut rng = indexed_stream(104, "acc4", trial);
        let dag = Dag::random(4, 2, &mut rng);
        let p = BayesNet::random(dag.clone(), 2, &mut rng).unwrap();
        let q = BayesNet::random(dag, 2, &mut rng).unwrap();
        let chain = kl_between_bns(&p, &q).unwrap();
        assert!(chain.exact);
        let pj = p.joint().unwrap();
        let qj = q.joint().unwrap();
        let joint = common::kl(pj.masses(), &pj.support().iter().map(|x| qj.prob(x)).collect::<Vec<_>>());
        worst = worst.max((chain.value - joint).abs());
    }
    c.finish(worst <= 1e-9, format!("max |chain − joint| = {worst:.2e} (need 1e-9)"));
}

#[test]
fn criterion_05_laplace_expected_kl() {
    let _g = exclusive();
    let c = Criterion::start(5, "Laplace expected-KL bound", 60);
    let trials = 10_000u64;
    let mut ok = true;
    let mut cells = Vec::new();
    for k in [2usize, 4, 8] {
        for z in [1u64, 9, 99] {
            let mut rng = indexed_stream(105, "acc5", (k as u64) * 1000 + z);
            let d = common::random_simplex(k, &mut rng);
            let dd = over_items(d.clone());
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..trials {
                let mut counts = vec![0u64; k];
                for _ in 0..z {
                    counts[*dd.draw(&mut rng)] += 1;
                }
                let est = laplace_estimate(&counts).unwrap();
                let v = common::kl(&d, est.masses());
                sum += v;
                sum_sq += v * v;
            }
            let mean = sum / trials as f64;
            let se = ((sum_sq / trials as f64 - mean * mean).max(0.0) / trials as f64).sqrt();
            let bound = (k as f64 - 1.0) / (z as f64 + 1.0);
            ok &= mean <= bound + 3.0 * se;
            cells.push(format!("k={k},z={z}:{mean:.4}<={bound:.4}"));
        }
    }
    c.finish(ok, cells.join(" "));
}

#[test]
fn criterion_06_pinsker() {
    let _g = exclusive();
    let c = Criterion::start(6, "Pinsker, dTV^2 <= 2 KL", 2);
    let mut violations = 0;
    for trial in 0..1000u64 {
        let mut rng = indexed_stream(106, "acc6", trial);
        let k = rng.random_range(2..=12);
        let p = over_items(common::random_simplex(k, &mut rng));
        let q = over_items(common::random_simplex(k, &mut rng));
        let d = exact_tv(&p, &q);
        if d * d > 2.0 * exact_kl(&p, &q) {
            violations += 1;
        }
    }
    c.finish(violations == 0, format!("{violations} violations over 1000 pairs"));
}

#[test]
fn criterion_07_ising_partition() {
    let _g = exclusive();
    let c = Criterion::start(7, "Ising partition function (1 ± eps)", 120);
    let (n, eps, models) = (12usize, 0.1, 50u64);
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..models {
        let mut rng = indexed_stream(107, "acc7", trial);
        let model = IsingModel::random_ferromagnetic(n, 2.0, 0.1, &mut rng).unwrap();
        assert!(model.width() <= 2.0 + 1e-12);
        let exact = exact_partition(&model).unwrap().ln_value;
        let est = estimate_partition(&model, eps, 0.1, &mut rng).unwrap().ln_value;
        let rel = ((est - exact).exp() - 1.0).abs();
        worst = worst.max(rel);
        if rel <= eps {
            hits += 1;
        }
    }
    let freq = hits as f64 / models as f64;
    c.finish(freq >= 0.9, format!("|Z^/Z − 1| <= {eps}: {freq:.3} of {models} (worst {worst:.4})"));
}

#[test]
fn criterion_08_ising_end_to_end() {
    let _g = exclusive();
    let c = Criterion::start(8, "Ising learn-and-estimate pipeline", 600);
    let (n, width, eps, delta, trials) = (8usize, 1.0, 0.12, 0.1, 50u64);
    let mut model_rng = indexed_stream(108, "acc8-models", 0);
    let p = IsingModel::random_ferromagnetic(n, width, 0.2, &mut model_rng).unwrap();
    let q = IsingModel::random_ferromagnetic(n, width, -0.1, &mut model_rng).unwrap();
    let theta = |m: &IsingModel| (0..n).map(|i| m.theta(i)).collect::<Vec<_>>();
    let truth = common::tv(
        &common::ising_pmf(&p.coupling_matrix(), &theta(&p)),
        &common::ising_pmf(&q.coupling_matrix(), &theta(&q)),
    );
    let (beta, _, mc) = ising_error_split(eps).unwrap();
    let learn = ising_learning_budget(n, width, beta, delta / 8.0).unwrap() as u64;
    let holdout = required_samples(mc, delta / 2.0).unwrap() as u64;
    let (sp, sq) = (ExactIsingSampler::new(&p).unwrap(), ExactIsingSampler::new(&q).unwrap());
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = indexed_stream(108, "acc8", trial);
        let hp = sp.draw_histogram(learn + holdout, &mut rng);
        let hq = sq.draw_histogram(learn, &mut rng);
        let report = estimate_tv_ising(&hp, &hq, width, eps, delta, &mut rng).unwrap();
        assert!((report.estimate.extra_error + mc - eps).abs() < 1e-12);
        if (report.estimate.value - truth).abs() <= eps {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    c.finish(
        freq >= 0.8,
        format!("D = {truth:.4}, m_P = {}, m_Q = {learn}: within {eps} in {freq:.3} (need 0.80)", learn + holdout),
    );
}

#[test]
fn criterion_09_gaussian_parameter_mode() {
    let _g = exclusive();
    let c = Criterion::start(9, "Gaussian parameter-mode distance", 10);
    let oracle = 0.5 * common::simpson(|x| (common::normal_pdf(x, 0.0, 1.0) - common::normal_pdf(x, 1.0, 1.0)).abs(), -12.0, 13.0, 20_000);
    let phi = statrs::distribution::ContinuousCDF::cdf(&statrs::distribution::Normal::standard(), 0.5);
    assert!((oracle - (2.0 * phi - 1.0)).abs() < 1e-9);
    assert!((oracle - 0.38292).abs() < 1e-5);
    let p = GaussianParams::new(vec![0.0], vec![vec![1.0]]).unwrap();
    let q = GaussianParams::new(vec![1.0], vec![vec![1.0]]).unwrap();
    let (eps, trials) = (0.02, 100u64);
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = indexed_stream(109, "acc9", trial);
        let est = tv_between_gaussians_params(&p, &q, eps, 0.1, &mut rng).unwrap();
        if (est.value - oracle).abs() <= eps {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    c.finish(freq >= 0.9, format!("oracle {oracle:.5}: within {eps} in {freq:.3} (need 0.90)"));
}

#[test]
fn criterion_10_gaussian_sample_mode() {
    let _g = exclusive();
    let c = Criterion::start(10, "Gaussian learn-and-estimate pipeline", 60);
    let oracle = common::tv_2d_unit([0.0, 0.0], [1.0, 0.0]);
    assert!((oracle - 0.382_924_922_5).abs() < 1e-6);
    let p = GaussianParams::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let q = GaussianParams::new(vec![1.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let (eps, delta, trials) = (0.1, 0.1, 50u64);
    let budget = gaussian_learning_budget(2, eps / 4.0).unwrap();
    let m_p = budget + required_samples(eps / 4.0, delta / 2.0).unwrap();
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = indexed_stream(110, "acc10", trial);
        let sp: Vec<_> = (0..m_p).map(|_| p.sample(&mut rng)).collect();
        let sq: Vec<_> = (0..budget).map(|_| q.sample(&mut rng)).collect();
        let report = estimate_tv_gaussians(&sp, &sq, eps, delta).unwrap();
        if (report.estimate.value - oracle).abs() <= eps {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    c.finish(freq >= 0.8, format!("oracle {oracle:.5}, m_P = {m_p}, m_Q = {budget}: within {eps} in {freq:.3} (need 0.80)"));
}

/// `P(x)/Pr[x_A | x_Π(A)]` on `{x_A = a}`, from the raw tables of a model without hidden nodes.
fn markovian_truncation(cbn: &Cbn, iv: Intervention) -> Vec<(Vec<usize>, f64)> {
    let (n, k) = (cbn.n(), cbn.alphabet());
    let row_of = |i: usize, x: &[usize]| -> &[f64] {
        let r = cbn.admg().parents(i).iter().fold(0, |acc, &j| acc * k + x[j]);
        &cbn.table(i)[r * k..(r + 1) * k]
    };
    let mut out = Vec::new();
    for idx in 0..k.pow(n as u32) {
        let x: Vec<usize> = (0..n).map(|i| idx / k.pow((n - 1 - i) as u32) % k).collect();
        let joint: f64 = (0..n).map(|i| row_of(i, &x)[x[i]]).product();
        let value = if x[iv.node] == iv.value { joint / row_of(iv.node, &x)[x[iv.node]] } else { 0.0 };
        out.push((x, value));
    }
    out
}

#[test]
fn criterion_11_causal_exactness() {
    let _g = exclusive();
    let c = Criterion::start(11, "interventional distributions are exact", 10);
    let mut worst: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for trial in 0..100u64 {
        let mut rng = indexed_stream(111, "acc11", trial);
        let cbn = Cbn::random(4, 2, 0, 2, &mut rng).unwrap();
        let iv = Intervention { node: rng.random_range(0..4), value: rng.random_range(0..2) };
        let pa = interventional_distribution(&cbn, iv).unwrap();
        worst_sum = worst_sum.max((pa.masses().iter().sum::<f64>() - 1.0).abs());
        for (x, v) in markovian_truncation(&cbn, iv) {
            worst = worst.max((pa.prob(&x) - v).abs());
        }
    }
    // A ← U → B, A → B: conditioning and intervening disagree.
    let hidden = vec![HiddenSource { children: [0, 1], dist: vec![0.5, 0.5] }];
    let cbn = Cbn::new(
        vec!["A".into(), "B".into()],
        2,
        vec![(0, 1)],
        hidden,
        vec![vec![0.9, 0.1, 0.1, 0.9], vec![0.8, 0.2, 0.3, 0.7, 0.6, 0.4, 0.1, 0.9]],
    )
    .unwrap();
    let pa = interventional_distribution(&cbn, Intervention { node: 0, value: 1 }).unwrap();
    let joint = cbn.observational_joint().unwrap();
    let do_b = pa.prob(&vec![1, 1]);
    let cond_b = joint.prob(&vec![1, 1]) / (joint.prob(&vec![1, 0]) + joint.prob(&vec![1, 1]));
    let confounded = (do_b - cond_b).abs() > 0.1;
    c.finish(
        worst <= 1e-12 && worst_sum <= 1e-12 && confounded,
        format!("max deviation {worst:.1e}, max |sum − 1| {worst_sum:.1e}, P_a(B=1) = {do_b:.3} vs P(B=1|A=1) = {cond_b:.3}"),
    );
}

/// A → B → C with a hidden source on (C, D); the pair differs only in B's row under A = 1.
fn causal_pair() -> (Cbn, Cbn) {
    let names: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
    let directed = vec![(0, 1), (1, 2)];
    let hidden = vec![HiddenSource { children: [2, 3], dist: vec![0.3, 0.7] }];
    let build = |b_row_a1: [f64; 2]| {
        let a = vec![0.6, 0.4];
        let b = vec![0.5, 0.5, b_row_a1[0], b_row_a1[1]];
        // C | (B, U), D | (U)
        let c = vec![0.9, 0.1, 0.2, 0.8, 0.4, 0.6, 0.7, 0.3];
        let d = vec![0.25, 0.75, 0.85, 0.15];
        Cbn::new(names.clone(), 2, directed.clone(), hidden.clone(), vec![a, b, c, d]).unwrap()
    };
    (build([0.7, 0.3]), build([0.3, 0.7]))
}

#[test]
fn criterion_12_causal_estimation() {
    let _g = exclusive();
    let c = Criterion::start(12, "interventional distance estimation", 30);
    // Reconstructed mixed graph: A..E = 0..4.
    let five_node = Admg::new(5, vec![(0, 1), (2, 1), (1, 3), (2, 4), (3, 4)], vec![(0, 2), (1, 3), (3, 4)]).unwrap();
    let components = c_components(&five_node);
    let expected = components == vec![vec![0, 2], vec![1, 3, 4]] && five_node.in_degree() == 2;

    let (p, q) = causal_pair();
    let iv = Intervention { node: 0, value: 1 };
    assert!(check_identifiability(p.admg(), 0).unwrap());
    let truth = exact_tv(&interventional_distribution(&p, iv).unwrap(), &interventional_distribution(&q, iv).unwrap());
    assert!((truth - 0.4).abs() < 1e-12);
    let (eps, trials) = (0.05, 100u64);
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = indexed_stream(112, "acc12", trial);
        let est = estimate_tv_interventional(&p, &q, iv, eps, 0.1, &mut rng).unwrap();
        if (est.value - truth).abs() <= eps {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    c.finish(
        freq >= 0.9 && expected,
        format!("dTV(P_a, Q_a) = {truth:.3}: within {eps} in {freq:.3} (need 0.90); c-components {components:?}"),
    );
}

#[test]
fn criterion_13_boosting() {
    let _g = exclusive();
    let c = Criterion::start(13, "boosting a 3/4-reliable learner", 30);
    let (eps, delta, trials) = (0.1, 0.05, 400u64);
    let r = boost_repetitions(delta).unwrap();
    assert_eq!(r, (324.0 * 40f64.ln()).ceil() as usize);
    let source = FnSampler {
        draw: |rng: &mut dyn RngCore| (rng.random::<f64>(), rng.random::<f64>()),
        description: "coin and offset".into(),
    };
    // Truth is 0. Success lands within eps/4; failure lands in [1, 2].
    let learner = |s: &[(f64, f64)]| {
        let (coin, v) = s[0];
        if coin < 0.75 {
            (v - 0.5) * eps / 2.0
        } else {
            1.0 + v
        }
    };
    let dist = |a: &f64, b: &f64, _: f64, _: f64, _: &mut dyn RngCore| (a - b).abs();
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = indexed_stream(113, "acc13", trial);
        let out = boost_learner(learner, dist, &source, 1, eps, delta, &mut rng).unwrap();
        assert_eq!(out.repetitions, r);
        if out.model.abs() <= 4.0 * (eps / 4.0) {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    c.finish(freq >= 0.95, format!("R = {r}: within eps in {freq:.3} of {trials} (need 0.95)"));
}
