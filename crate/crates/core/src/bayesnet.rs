//! Bayesian networks on a known DAG.
//!
//! Exact evaluation through the factorization `P(x) = Π_i P(x_i | x_parents(i))`,
//! ancestral sampling, the thresholded Laplace learner, the chain-rule KL, and
//! the learn-then-estimate distance pipeline.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::discrete::{kl_terms, laplace_row, Assignment, DiscreteDistribution};
use crate::enumerate::{for_each_assignment, radix_digits, radix_index};
use crate::error::{check_unit_open, param, Error, Result};
use crate::estimator::{
    estimate_tv_from_draws, required_samples, EvalApproximator, Sampler, TvEstimate, WithSlack,
};
use crate::limits::{self, symbol_bits};
use crate::rng;

/// A DAG over `0..n`, stored as ordered parent lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
}

impl Dag {
    pub fn new(parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = parents.len();
        for (i, ps) in parents.iter().enumerate() {
            for (pos, &p) in ps.iter().enumerate() {
                if p >= n {
                    return param(format!("node {i} has parent {p} outside 0..{n}"));
                }
                if p == i {
                    return param(format!("node {i} lists itself as a parent"));
                }
                if ps[..pos].contains(&p) {
                    return param(format!("node {i} lists parent {p} twice"));
                }
            }
        }
        let topo_order = topological_order(&parents)
            .ok_or_else(|| Error::Parameter("parent lists contain a directed cycle".into()))?;
        Ok(Self {
            parents,
            topo_order,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self::new(vec![Vec::new(); n]).expect("edgeless graph is acyclic")
    }

    /// `0 → 1 → … → n-1`.
    pub fn chain(n: usize) -> Self {
        Self::new((0..n).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect())
            .expect("chain is acyclic")
    }

    /// Node 0 is the parent of every other node.
    pub fn star(n: usize) -> Self {
        Self::new((0..n).map(|i| if i == 0 { vec![] } else { vec![0] }).collect())
            .expect("star is acyclic")
    }

    /// Node `i` gets `min(d, i)` distinct parents drawn uniformly from `0..i`.
    pub fn random(n: usize, d: usize, rng: &mut dyn RngCore) -> Self {
        let parents = (0..n)
            .map(|i| {
                let mut ps = sample_indices(rng, i, d.min(i)).into_vec();
                ps.sort_unstable();
                ps
            })
            .collect();
        Self::new(parents).expect("parents precede children")
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn parent_lists(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn in_degree(&self) -> usize {
        self.parents.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.n()).filter(|&c| self.parents[c].contains(&i)).collect()
    }
}

/// Kahn's algorithm; `None` on a cycle.
pub(crate) fn topological_order(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut missing: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| missing[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &c in children[i].iter().rev() {
            missing[c] -= 1;
            if missing[c] == 0 {
                ready.push(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A Bayesian network: a DAG plus one conditional table per node.
///
/// `cpt[i]` is flattened row-major: the row for parent assignment `a` (mixed
/// radix, first parent most significant) occupies `[r·k, (r+1)·k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    dag: Dag,
    alphabet: usize,
    cpt: Vec<Vec<f64>>,
}

const ROW_TOLERANCE: f64 = 1e-12;

impl BayesNet {
    /// Builds a net from flattened tables, validating every row.
    pub fn new(dag: Dag, alphabet: usize, cpt: Vec<Vec<f64>>) -> Result<Self> {
        if alphabet < 2 {
            return param(format!("alphabet size must be at least 2, got {alphabet}"));
        }
        if cpt.len() != dag.n() {
            return param(format!("{} tables for {} nodes", cpt.len(), dag.n()));
        }
        for (i, table) in cpt.iter().enumerate() {
            let rows = rows_for(alphabet, dag.parents(i).len())?;
            if table.len() != rows * alphabet {
                return param(format!(
                    "node {i} needs {rows} rows of {alphabet} entries, table has {} entries",
                    table.len()
                ));
            }
            for (r, row) in table.chunks(alphabet).enumerate() {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) || (sum - 1.0).abs() > ROW_TOLERANCE {
                    return param(format!("node {i} row {r} is not a distribution (sum {sum})"));
                }
            }
        }
        Ok(Self { dag, alphabet, cpt })
    }

    /// Every row uniform over the alphabet.
    pub fn uniform(dag: Dag, alphabet: usize) -> Result<Self> {
        let cpt = (0..dag.n())
            .map(|i| rows_for(alphabet, dag.parents(i).len()).map(|rows| vec![1.0 / alphabet as f64; rows * alphabet]))
            .collect::<Result<_>>()?;
        Self::new(dag, alphabet, cpt)
    }

    /// Rows drawn from Dirichlet(1, …, 1).
    pub fn random(dag: Dag, alphabet: usize, rng: &mut dyn RngCore) -> Result<Self> {
        let mut cpt = Vec::with_capacity(dag.n());
        for i in 0..dag.n() {
            let rows = rows_for(alphabet, dag.parents(i).len())?;
            let mut table = Vec::with_capacity(rows * alphabet);
            for _ in 0..rows {
                table.extend(dirichlet_ones(alphabet, rng));
            }
            cpt.push(table);
        }
        Self::new(dag, alphabet, cpt)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn rows(&self, i: usize) -> usize {
        self.cpt[i].len() / self.alphabet
    }

    pub fn row(&self, i: usize, r: usize) -> &[f64] {
        &self.cpt[i][r * self.alphabet..(r + 1) * self.alphabet]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.cpt
    }

    /// Row index selected by the parents of `i` in `x`.
    pub fn parent_row(&self, i: usize, x: &[usize]) -> usize {
        radix_index(self.dag.parents(i).iter().map(|&p| x[p]), self.alphabet)
    }

    pub fn check_assignment(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.n() {
            return param(format!("assignment has length {}, net has {} nodes", x.len(), self.n()));
        }
        if let Some(s) = x.iter().find(|&&s| s >= self.alphabet) {
            return param(format!("symbol {s} outside alphabet of size {}", self.alphabet));
        }
        Ok(())
    }

    /// `ln P(x)`, no validation.
    pub(crate) fn ln_prob_unchecked(&self, x: &[usize]) -> f64 {
        (0..self.n())
            .map(|i| self.row(i, self.parent_row(i, x))[x[i]].ln())
            .sum()
    }

    pub fn ln_prob(&self, x: &[usize]) -> Result<f64> {
        self.check_assignment(x)?;
        Ok(self.ln_prob_unchecked(x))
    }

    /// Ancestral sample in topological order.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Assignment {
        let mut x = vec![0; self.n()];
        for &i in self.dag.topo_order() {
            let row = self.row(i, self.parent_row(i, &x));
            x[i] = draw_from_row(row, rng);
        }
        x
    }

    fn enumeration_bits(&self) -> u32 {
        self.n() as u32 * symbol_bits(self.alphabet)
    }

    /// The full joint as a table over `Σⁿ`.
    pub fn joint(&self) -> Result<DiscreteDistribution> {
        limits::check("Bayes net joint", self.enumeration_bits(), limits::BN_JOINT_ENUM_BITS)?;
        let (support, mass) = self.joint_dense();
        DiscreteDistribution::from_weights(support, mass)
    }

    /// Joint probabilities in radix order of `Σⁿ`, together with the support.
    fn joint_dense(&self) -> (Vec<Assignment>, Vec<f64>) {
        let mut support = Vec::new();
        let mut mass = Vec::new();
        for_each_assignment(self.n(), self.alphabet, |x| {
            support.push(x.to_vec());
            mass.push(self.ln_prob_unchecked(x).exp());
        });
        (support, mass)
    }

    /// Exact `P[Π[i, a]]` for every node and parent assignment, by enumeration.
    pub fn parent_event_table(&self) -> Result<Vec<Vec<f64>>> {
        limits::check("parent-event marginals", self.enumeration_bits(), limits::BN_KL_ENUM_BITS)?;
        let mut table: Vec<Vec<f64>> = (0..self.n()).map(|i| vec![0.0; self.rows(i)]).collect();
        for_each_assignment(self.n(), self.alphabet, |x| {
            let px = self.ln_prob_unchecked(x).exp();
            if px > 0.0 {
                for (i, slots) in table.iter_mut().enumerate() {
                    slots[self.parent_row(i, x)] += px;
                }
            }
        });
        Ok(table)
    }
}

fn rows_for(alphabet: usize, degree: usize) -> Result<usize> {
    alphabet
        .checked_pow(degree as u32)
        .filter(|&r| r <= 1 << 26)
        .ok_or_else(|| Error::Parameter(format!("{alphabet}^{degree} conditional rows is too many")))
}

pub(crate) fn dirichlet_ones(k: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let mut row: Vec<f64> = draws.iter().map(|d| d / total).collect();
    // Push the rounding residue into the largest entry so rows sum to 1 exactly enough.
    let residue = 1.0 - row.iter().sum::<f64>();
    let largest = (0..k).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0);
    row[largest] += residue;
    row
}

pub(crate) fn draw_from_row(row: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random::<f64>() * row.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (s, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = s;
            if u < acc {
                return s;
            }
        }
    }
    last_positive
}

/// `P(x)` via the factorization, computed in log space.
pub fn bn_prob(bn: &BayesNet, x: &[usize]) -> Result<f64> {
    Ok(bn.ln_prob(x)?.exp())
}

pub fn bn_sample(bn: &BayesNet, rng: &mut dyn RngCore) -> Assignment {
    bn.sample(rng)
}

impl Sampler<Assignment> for BayesNet {
    fn draw(&self, rng: &mut dyn RngCore) -> Assignment {
        self.sample(rng)
    }
    fn description(&self) -> String {
        format!("Bayes net, n = {}, |Σ| = {}", self.n(), self.alphabet)
    }
}

impl EvalApproximator<Assignment> for BayesNet {
    fn eval(&self, x: &Assignment) -> f64 {
        self.ln_eval(x).exp()
    }
    fn ln_eval(&self, x: &Assignment) -> f64 {
        match self.check_assignment(x) {
            Ok(()) => self.ln_prob_unchecked(x),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// The event "parents of `node` take value `assignment`" and its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentEvent {
    pub node: usize,
    pub assignment: Vec<usize>,
    pub probability: f64,
}

/// All parent events of `bn` with exact probabilities.
pub fn parent_events(bn: &BayesNet) -> Result<Vec<ParentEvent>> {
    let table = bn.parent_event_table()?;
    let mut out = Vec::new();
    for (node, probs) in table.into_iter().enumerate() {
        let deg = bn.dag().parents(node).len();
        for (r, probability) in probs.into_iter().enumerate() {
            out.push(ParentEvent {
                node,
                assignment: radix_digits(r, deg, bn.alphabet()),
                probability,
            });
        }
    }
    Ok(out)
}

/// Thresholded Laplace learner on a fixed DAG.
///
/// For each node `i` and parent assignment `a`, rows seen at least `t` times
/// get the Laplace-corrected empirical distribution of `x_i`; all other rows
/// are uniform over the alphabet.
pub fn learn_bn(samples: &[Assignment], dag: &Dag, alphabet: usize, t: usize) -> Result<BayesNet> {
    if t == 0 {
        return param("threshold t must be at least 1");
    }
    if alphabet < 2 {
        return param(format!("alphabet size must be at least 2, got {alphabet}"));
    }
    let n = dag.n();
    let mut counts: Vec<Vec<u64>> = (0..n)
        .map(|i| rows_for(alphabet, dag.parents(i).len()).map(|rows| vec![0u64; rows * alphabet]))
        .collect::<Result<_>>()?;
    for (s, x) in samples.iter().enumerate() {
        if x.len() != n {
            return param(format!("sample {s} has length {}, DAG has {n} nodes", x.len()));
        }
        if let Some(bad) = x.iter().find(|&&v| v >= alphabet) {
            return param(format!("sample {s} has symbol {bad} outside alphabet of size {alphabet}"));
        }
        for (i, table) in counts.iter_mut().enumerate() {
            let r = radix_index(dag.parents(i).iter().map(|&p| x[p]), alphabet);
            table[r * alphabet + x[i]] += 1;
        }
    }
    let uniform = vec![1.0 / alphabet as f64; alphabet];
    let cpt = counts
        .iter()
        .map(|table| {
            table
                .chunks(alphabet)
                .flat_map(|row| {
                    let seen: u64 = row.iter().sum();
                    if seen >= t as u64 {
                        laplace_row(row)
                    } else {
                        uniform.clone()
                    }
                })
                .collect()
        })
        .collect();
    BayesNet::new(dag.clone(), alphabet, cpt)
}

/// Threshold `ceil(12 ln(n·k^d))` used with [`learn_bn`].
pub fn learning_threshold(n: usize, d: usize, alphabet: usize) -> usize {
    let events = n as f64 * (alphabet as f64).powi(d as i32);
    (12.0 * events.max(1.0).ln()).ceil().max(1.0) as usize
}

/// Binary-alphabet sample size `ceil(24·n·2^d·ln(n·2^d)/ε)` for a KL target `ε`.
pub fn binary_learning_samples(n: usize, d: usize, epsilon_kl: f64) -> usize {
    let events = n as f64 * 2f64.powi(d as i32);
    (24.0 * events * events.ln() / epsilon_kl).ceil() as usize
}

/// Sample budget for learning a Bayes net within TV `epsilon` w.p. `1 − delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnBudget {
    /// Variables after binary encoding, `n·ceil(log₂|Σ|)`.
    pub encoded_n: usize,
    /// In-degree after binary encoding, `(d+1)·ceil(log₂|Σ|)`.
    pub encoded_d: usize,
    /// KL target `ε²/72`.
    pub epsilon_kl: f64,
    pub per_repetition: usize,
    /// `ceil(18 ln(1/δ))`.
    pub repetitions: usize,
    pub total: usize,
}

pub fn bn_recommended_m(n: usize, d: usize, alphabet: usize, epsilon: f64, delta: f64) -> Result<BnBudget> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    if n == 0 || alphabet < 2 {
        return param("need n ≥ 1 and |Σ| ≥ 2");
    }
    let bits = symbol_bits(alphabet) as usize;
    let encoded_n = n * bits;
    let encoded_d = (d + 1) * bits;
    let epsilon_kl = epsilon * epsilon / 72.0;
    let per_repetition = binary_learning_samples(encoded_n, encoded_d, epsilon_kl);
    let repetitions = crate::estimator::median_repetitions(delta)?;
    Ok(BnBudget {
        encoded_n,
        encoded_d,
        epsilon_kl,
        per_repetition,
        repetitions,
        total: per_repetition.saturating_mul(repetitions),
    })
}

/// `KL(P, Q)` between two nets on one DAG, with its Monte Carlo standard
/// error (zero when computed exactly).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlEstimate {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

const KL_MC_DRAWS: usize = 100_000;

/// `Σ_i Σ_a P[Π[i,a]]·KL(P(i|a), Q(i|a))`.
///
/// Parent-event probabilities are exact up to the enumeration guard and
/// estimated from `P`-samples beyond it.
pub fn kl_between_bns(p: &BayesNet, q: &BayesNet) -> Result<KlEstimate> {
    if p.dag() != q.dag() {
        return param("KL chain rule needs both nets on the same DAG");
    }
    if p.alphabet() != q.alphabet() {
        return param("nets use different alphabets");
    }
    let row_kl = |i: usize, r: usize| kl_terms(p.row(i, r).iter().copied().zip(q.row(i, r).iter().copied()));
    match p.parent_event_table() {
        Ok(events) => {
            let mut value = 0.0;
            for (i, probs) in events.iter().enumerate() {
                for (r, &pa) in probs.iter().enumerate() {
                    if pa > 0.0 {
                        value += pa * row_kl(i, r);
                    }
                }
            }
            Ok(KlEstimate {
                value,
                std_error: 0.0,
                exact: true,
            })
        }
        Err(Error::Size { .. }) => {
            let mut rng = rng::stream(0, "kl_between_bns");
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..KL_MC_DRAWS {
                let x = p.sample(&mut rng);
                let f: f64 = (0..p.n()).map(|i| row_kl(i, p.parent_row(i, &x))).sum();
                sum += f;
                sum_sq += f * f;
            }
            let m = KL_MC_DRAWS as f64;
            let mean = sum / m;
            let var = (sum_sq / m - mean * mean).max(0.0);
            Ok(KlEstimate {
                value: mean,
                std_error: (var / m).sqrt(),
                exact: false,
            })
        }
        Err(e) => Err(e),
    }
}

/// Output of [`estimate_tv_bns`].
#[derive(Debug, Clone)]
pub struct BnTvReport {
    pub estimate: TvEstimate,
    pub learned_p: BayesNet,
    pub learned_q: BayesNet,
    /// Rows of `samples_p` used for learning; the rest fed the estimator.
    pub learning_samples_p: usize,
}

/// Learns both nets, then runs the distance estimator on held-out `P` rows.
///
/// The last `required_samples(ε/4, δ/2)` rows of `samples_p` are held out;
/// each learned net is declared an `(ε/4, 0)` approximator, so the reported
/// bound is `3ε/4 + ε/4 = ε`.
pub fn estimate_tv_bns(
    samples_p: &[Assignment],
    samples_q: &[Assignment],
    dag_p: &Dag,
    dag_q: &Dag,
    alphabet: usize,
    epsilon: f64,
    delta: f64,
) -> Result<BnTvReport> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    if dag_p.n() != dag_q.n() {
        return param("the two DAGs must cover the same variables");
    }
    let accuracy = epsilon / 4.0;
    let holdout = required_samples(accuracy, delta / 2.0)?;
    if samples_p.len() <= holdout || samples_q.is_empty() {
        return Err(Error::InsufficientSamples {
            what: "Bayes net pipeline (P samples)",
            required: holdout + 1,
            got: samples_p.len(),
        });
    }
    let (learn_rows, fresh) = samples_p.split_at(samples_p.len() - holdout);
    let t_p = learning_threshold(dag_p.n(), dag_p.in_degree(), alphabet);
    let t_q = learning_threshold(dag_q.n(), dag_q.in_degree(), alphabet);
    let learned_p = learn_bn(learn_rows, dag_p, alphabet, t_p)?;
    let learned_q = learn_bn(samples_q, dag_q, alphabet, t_q)?;
    let eval_p = WithSlack::new(&learned_p, accuracy, 0.0)?;
    let eval_q = WithSlack::new(&learned_q, accuracy, 0.0)?;
    let estimate = estimate_tv_from_draws(fresh, &eval_p, &eval_q, accuracy, delta / 2.0)?;
    Ok(BnTvReport {
        estimate,
        learned_p,
        learned_q,
        learning_samples_p: learn_rows.len(),
    })
}

// Binary encoding of non-binary alphabets.

/// Maps each symbol to `ceil(log₂|Σ|)` bits, most significant first.
pub fn encode_assignment(x: &[usize], alphabet: usize) -> Assignment {
    let bits = symbol_bits(alphabet) as usize;
    x.iter()
        .flat_map(|&s| (0..bits).map(move |j| (s >> (bits - 1 - j)) & 1))
        .collect()
}

pub fn decode_assignment(bits: &[usize], alphabet: usize) -> Assignment {
    let width = symbol_bits(alphabet) as usize;
    bits.chunks(width).map(|chunk| radix_index(chunk.iter().copied(), 2)).collect()
}

/// DAG of the bit encoding: bit `j` of node `i` has as parents every bit of
/// every parent of `i`, then bits `0..j` of `i` itself.
pub fn encoded_dag(dag: &Dag, alphabet: usize) -> Dag {
    let b = symbol_bits(alphabet) as usize;
    let mut parents = Vec::with_capacity(dag.n() * b);
    for i in 0..dag.n() {
        for j in 0..b {
            let mut ps: Vec<usize> = dag.parents(i).iter().flat_map(|&p| (0..b).map(move |k| p * b + k)).collect();
            ps.extend((0..j).map(|k| i * b + k));
            parents.push(ps);
        }
    }
    Dag::new(parents).expect("encoding preserves acyclicity")
}

/// Exact binary encoding of `bn`; padding symbols (≥ |Σ|) get zero mass.
pub fn encode_binary(bn: &BayesNet) -> Result<BayesNet> {
    let k = bn.alphabet();
    let b = symbol_bits(k) as usize;
    let dag = encoded_dag(bn.dag(), k);
    let mut cpt = Vec::with_capacity(dag.n());
    for i in 0..bn.n() {
        let deg = bn.dag().parents(i).len();
        for j in 0..b {
            let width = deg * b + j;
            let rows = 1usize << width;
            let mut table = Vec::with_capacity(rows * 2);
            for r in 0..rows {
                let bits = radix_digits(r, width, 2);
                let parent_symbols = decode_assignment(&bits[..deg * b], k);
                let prefix = radix_index(bits[deg * b..].iter().copied(), 2);
                let mut mass = [0.0; 2];
                if parent_symbols.iter().all(|&s| s < k) {
                    let row = bn.row(i, radix_index(parent_symbols, k));
                    for (s, &p) in row.iter().enumerate() {
                        if s >> (b - j) == prefix {
                            mass[(s >> (b - 1 - j)) & 1] += p;
                        }
                    }
                }
                let total = mass[0] + mass[1];
                if total > 0.0 {
                    table.extend([mass[0] / total, mass[1] / total]);
                } else {
                    table.extend([0.5, 0.5]);
                }
            }
            cpt.push(table);
        }
    }
    BayesNet::new(dag, 2, cpt)
}

/// Reads a `Σ`-net back out of a binary net on [`encoded_dag`], conditioning
/// away padding symbols.
pub fn decode_binary(encoded: &BayesNet, dag: &Dag, alphabet: usize) -> Result<BayesNet> {
    let k = alphabet;
    let b = symbol_bits(k) as usize;
    if encoded.dag() != &encoded_dag(dag, k) || encoded.alphabet() != 2 {
        return param("net is not a binary encoding of the given DAG");
    }
    let mut cpt = Vec::with_capacity(dag.n());
    for i in 0..dag.n() {
        let deg = dag.parents(i).len();
        let rows = rows_for(k, deg)?;
        let mut table = Vec::with_capacity(rows * k);
        for r in 0..rows {
            let parent_bits = encode_assignment(&radix_digits(r, deg, k), k);
            let mut row: Vec<f64> = (0..k)
                .map(|s| {
                    let own = encode_assignment(&[s], k);
                    (0..b)
                        .map(|j| {
                            let node = i * b + j;
                            let cond = parent_bits.iter().chain(&own[..j]).copied();
                            encoded.row(node, radix_index(cond, 2))[own[j]]
                        })
                        .product()
                })
                .collect();
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|p| *p /= total);
            } else {
                row = vec![1.0 / k as f64; k];
            }
            table.extend(row);
        }
        cpt.push(table);
    }
    BayesNet::new(dag.clone(), k, cpt)
}

/// [`learn_bn`] run on the bit encoding, decoded back to `Σ`.
pub fn learn_bn_binary_encoded(samples: &[Assignment], dag: &Dag, alphabet: usize, t: usize) -> Result<BayesNet> {
    let encoded: Vec<Assignment> = samples
        .iter()
        .map(|x| {
            if let Some(bad) = x.iter().find(|&&s| s >= alphabet) {
                return param(format!("symbol {bad} outside alphabet of size {alphabet}"));
            }
            Ok(encode_assignment(x, alphabet))
        })
        .collect::<Result<_>>()?;
    let binary_dag = encoded_dag(dag, alphabet);
    let learned = learn_bn(&encoded, &binary_dag, 2, t)?;
    decode_binary(&learned, dag, alphabet)
}

// JSON interchange.

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CptEntry {
    pub a: Vec<usize>,
    pub row: Vec<f64>,
}

/// `{"n", "alphabet", "parents", "cpt"}` model file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BayesNetJson {
    pub n: usize,
    pub alphabet: usize,
    pub parents: Vec<Vec<usize>>,
    pub cpt: Vec<Vec<CptEntry>>,
}

impl From<&BayesNet> for BayesNetJson {
    fn from(bn: &BayesNet) -> Self {
        let cpt = (0..bn.n())
            .map(|i| {
                let deg = bn.dag().parents(i).len();
                (0..bn.rows(i))
                    .map(|r| CptEntry {
                        a: radix_digits(r, deg, bn.alphabet()),
                        row: bn.row(i, r).to_vec(),
                    })
                    .collect()
            })
            .collect();
        Self {
            n: bn.n(),
            alphabet: bn.alphabet(),
            parents: bn.dag().parent_lists().to_vec(),
            cpt,
        }
    }
}

impl TryFrom<BayesNetJson> for BayesNet {
    type Error = Error;

    fn try_from(json: BayesNetJson) -> Result<Self> {
        if json.parents.len() != json.n || json.cpt.len() != json.n {
            return Err(Error::Model(format!(
                "n = {} but {} parent lists and {} tables",
                json.n,
                json.parents.len(),
                json.cpt.len()
            )));
        }
        let k = json.alphabet;
        if k < 2 {
            return Err(Error::Model(format!("alphabet must be at least 2, got {k}")));
        }
        let dag = Dag::new(json.parents).map_err(|e| Error::Model(e.to_string()))?;
        let mut cpt = Vec::with_capacity(json.n);
        for (i, entries) in json.cpt.into_iter().enumerate() {
            let deg = dag.parents(i).len();
            let rows = rows_for(k, deg)?;
            let mut table = vec![f64::NAN; rows * k];
            let mut seen = vec![false; rows];
            for entry in entries {
                if entry.a.len() != deg || entry.a.iter().any(|&s| s >= k) || entry.row.len() != k {
                    return Err(Error::Model(format!("node {i}: malformed row for parents {:?}", entry.a)));
                }
                let r = radix_index(entry.a.iter().copied(), k);
                if std::mem::replace(&mut seen[r], true) {
                    return Err(Error::Model(format!("node {i}: duplicate row for parents {:?}", entry.a)));
                }
                table[r * k..(r + 1) * k].copy_from_slice(&entry.row);
            }
            if let Some(r) = seen.iter().position(|s| !s) {
                return Err(Error::Model(format!(
                    "node {i}: missing row for parents {:?}",
                    radix_digits(r, deg, k)
                )));
            }
            cpt.push(table);
        }
        BayesNet::new(dag, k, cpt).map_err(|e| Error::Model(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::exact_kl;
    use approx::assert_abs_diff_eq;

    fn chain_example() -> BayesNet {
        // P[X0=1] = 0.3, P[X1=1 | X0=1] = 0.9, P[X1=1 | X0=0] = 0.2
        BayesNet::new(Dag::chain(2), 2, vec![vec![0.7, 0.3], vec![0.8, 0.2, 0.1, 0.9]]).unwrap()
    }

    #[test]
    fn factorization_examples() {
        let product = BayesNet::uniform(Dag::empty(2), 2).unwrap();
        assert_abs_diff_eq!(bn_prob(&product, &[0, 1]).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(bn_prob(&chain_example(), &[1, 0]).unwrap(), 0.03, epsilon = 1e-15);
        assert!(bn_prob(&product, &[0, 2]).is_err());
        assert!(bn_prob(&product, &[0]).is_err());
    }

    #[test]
    fn random_nets_normalize() {
        let mut rng = rng::stream(11, "normalize");
        for k in [2, 3] {
            let dag = Dag::random(5, 2, &mut rng);
            let bn = BayesNet::random(dag, k, &mut rng).unwrap();
            let joint = bn.joint().unwrap();
            let total: f64 = crate::enumerate::assignments(5, k).map(|x| bn_prob(&bn, &x).unwrap()).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
            assert_eq!(joint.len(), k.pow(5));
        }
    }

    #[test]
    fn dag_validation() {
        assert!(Dag::new(vec![vec![1], vec![0]]).is_err());
        assert!(Dag::new(vec![vec![0]]).is_err());
        assert!(Dag::new(vec![vec![3]]).is_err());
        assert!(Dag::new(vec![vec![], vec![0, 0]]).is_err());
        let dag = Dag::new(vec![vec![2], vec![], vec![1]]).unwrap();
        let pos = |v: usize| dag.topo_order().iter().position(|&x| x == v).unwrap();
        assert!(pos(1) < pos(2) && pos(2) < pos(0));
        assert_eq!(dag.in_degree(), 1);
        assert_eq!(dag.children(1), vec![2]);
    }

    #[test]
    fn deterministic_net_samples_its_unique_assignment() {
        let bn = BayesNet::new(Dag::chain(3), 2, vec![vec![0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]]).unwrap();
        let mut rng = rng::stream(12, "det");
        for _ in 0..100 {
            assert_eq!(bn.sample(&mut rng), vec![1, 0, 1]);
        }
    }

    #[test]
    fn learner_edge_cases() {
        let single = Dag::empty(1);
        let samples = vec![vec![1], vec![1], vec![1], vec![0]];
        let learned = learn_bn(&samples, &single, 2, 1).unwrap();
        assert_abs_diff_eq!(learned.row(0, 0)[0], 2.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(learned.row(0, 0)[1], 4.0 / 6.0, epsilon = 1e-15);

        let uniform = learn_bn(&samples, &single, 2, 5).unwrap();
        assert_eq!(uniform.row(0, 0), &[0.5, 0.5]);

        let empty = learn_bn(&[], &Dag::chain(3), 3, 1).unwrap();
        assert_eq!(empty, BayesNet::uniform(Dag::chain(3), 3).unwrap());

        assert!(learn_bn(&[vec![0, 1]], &single, 2, 1).is_err());
        assert!(learn_bn(&[vec![2]], &single, 2, 1).is_err());
        assert!(learn_bn(&samples, &single, 2, 0).is_err());
    }

    #[test]
    fn kl_identities() {
        let mut rng = rng::stream(13, "kl");
        let dag = Dag::random(4, 2, &mut rng);
        let p = BayesNet::random(dag.clone(), 2, &mut rng).unwrap();
        let q = BayesNet::random(dag.clone(), 2, &mut rng).unwrap();
        assert_eq!(kl_between_bns(&p, &p).unwrap().value, 0.0);
        let chain = kl_between_bns(&p, &q).unwrap();
        assert!(chain.exact);
        assert_abs_diff_eq!(chain.value, exact_kl(&p.joint().unwrap(), &q.joint().unwrap()), epsilon = 1e-9);

        // Edgeless nets: sum of marginal KLs.
        let e = Dag::empty(3);
        let p = BayesNet::random(e.clone(), 3, &mut rng).unwrap();
        let q = BayesNet::random(e.clone(), 3, &mut rng).unwrap();
        let marginal_sum: f64 = (0..3).map(|i| crate::discrete::kl_dense(p.row(i, 0), q.row(i, 0))).sum();
        assert_abs_diff_eq!(kl_between_bns(&p, &q).unwrap().value, marginal_sum, epsilon = 1e-12);

        let other = BayesNet::random(Dag::chain(3), 3, &mut rng).unwrap();
        assert!(kl_between_bns(&p, &other).is_err());
    }

    #[test]
    fn kl_infinite_when_q_misses_mass() {
        let p = BayesNet::new(Dag::empty(1), 2, vec![vec![0.5, 0.5]]).unwrap();
        let q = BayesNet::new(Dag::empty(1), 2, vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(kl_between_bns(&p, &q).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn budget_formulas() {
        let eps = 0.2;
        let b = bn_recommended_m(1, 0, 2, eps, 0.1).unwrap();
        let eps_kl = eps * eps / 72.0;
        assert_eq!(b.per_repetition, (24.0 * 2.0 * 2f64.ln() / eps_kl).ceil() as usize);
        assert_eq!(b.repetitions, 42);
        let four = bn_recommended_m(3, 1, 4, eps, 0.1).unwrap();
        let two = bn_recommended_m(3, 1, 2, eps, 0.1).unwrap();
        assert_eq!(four.encoded_n, 2 * two.encoded_n);
        assert_eq!(four.encoded_d, 2 * two.encoded_d);
        let small = bn_recommended_m(4, 1, 2, eps, 0.1).unwrap();
        let big = bn_recommended_m(8, 1, 2, eps, 0.1).unwrap();
        assert!(big.per_repetition > 2 * small.per_repetition);
    }

    #[test]
    fn binary_encoding_preserves_the_joint() {
        let mut rng = rng::stream(14, "encode");
        let dag = Dag::random(3, 1, &mut rng);
        let bn = BayesNet::random(dag.clone(), 3, &mut rng).unwrap();
        let enc = encode_binary(&bn).unwrap();
        for x in crate::enumerate::assignments(3, 3) {
            let bits = encode_assignment(&x, 3);
            assert_eq!(decode_assignment(&bits, 3), x);
            assert_abs_diff_eq!(bn_prob(&enc, &bits).unwrap(), bn_prob(&bn, &x).unwrap(), epsilon = 1e-12);
        }
        let back = decode_binary(&enc, &dag, 3).unwrap();
        for (a, b) in back.tables().iter().flatten().zip(bn.tables().iter().flatten()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let bn = chain_example();
        let json = BayesNetJson::from(&bn);
        let text = serde_json::to_string(&json).unwrap();
        let back = BayesNet::try_from(serde_json::from_str::<BayesNetJson>(&text).unwrap()).unwrap();
        assert_eq!(back, bn);

        let mut missing = json.clone();
        missing.cpt[1].pop();
        assert!(BayesNet::try_from(missing).is_err());
        let mut bad_row = json;
        bad_row.cpt[0][0].row = vec![0.5, 0.6];
        assert!(BayesNet::try_from(bad_row).is_err());
    }
}
