//! Causal Bayesian networks with hidden confounders and atomic interventions.
//!
//! Hidden variables are sources with exactly two observable children; in
//! the mixed graph over the observables each one becomes a bidirected edge
//! between its children.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bayesnet::{dirichlet_ones, draw_from_row, topological_order, CptEntry, Dag};
use crate::discrete::DiscreteDistribution;
use crate::enumerate::for_each_assignment;
use crate::error::{param, Error, Result};
use crate::estimator::{estimate_tv, EvalApproximator, Sampler, TvEstimate};
use crate::limits;
use crate::Assignment;

const ROW_TOLERANCE: f64 = 1e-12;

/// Acyclic directed mixed graph over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admg {
    n: usize,
    directed: Vec<(usize, usize)>,
    bidirected: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
}

impl Admg {
    pub fn new(n: usize, directed: Vec<(usize, usize)>, bidirected: Vec<(usize, usize)>) -> Result<Self> {
        for &(a, b) in directed.iter().chain(&bidirected) {
            if a >= n || b >= n {
                return param(format!("edge ({a}, {b}) leaves the node range 0..{n}"));
            }
            if a == b {
                return param(format!("self-loop at node {a}"));
            }
        }
        let mut parents = vec![Vec::new(); n];
        for &(a, b) in &directed {
            if !parents[b].contains(&a) {
                parents[b].push(a);
            }
        }
        parents.iter_mut().for_each(|p| p.sort_unstable());
        if topological_order(&parents).is_none() {
            return param("directed part has a cycle");
        }
        let bidirected = bidirected.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        Ok(Self { n, directed, bidirected, parents })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn directed(&self) -> &[(usize, usize)] {
        &self.directed
    }

    pub fn bidirected(&self) -> &[(usize, usize)] {
        &self.bidirected
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.parents[j].contains(&i)).collect()
    }

    pub fn in_degree(&self) -> usize {
        self.parents.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Copy without the given bidirected edge (either orientation).
    pub fn without_bidirected(&self, a: usize, b: usize) -> Self {
        let key = (a.min(b), a.max(b));
        let mut out = self.clone();
        out.bidirected.retain(|&e| e != key);
        out
    }

    fn check_node(&self, a: usize) -> Result<()> {
        if a >= self.n {
            return param(format!("node {a} is not in the graph (n = {})", self.n));
        }
        Ok(())
    }
}

/// Connected components of the bidirected part, each sorted, ordered by smallest member.
pub fn c_components(admg: &Admg) -> Vec<Vec<usize>> {
    let mut root: Vec<usize> = (0..admg.n).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    for &(a, b) in &admg.bidirected {
        let (ra, rb) = (find(&mut root, a), find(&mut root, b));
        if ra != rb {
            root[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..admg.n {
        let r = find(&mut root, v);
        groups.entry(r).or_default().push(v);
    }
    groups.into_values().collect()
}

/// The c-component containing `a`.
pub fn component_of(admg: &Admg, a: usize) -> Result<Vec<usize>> {
    admg.check_node(a)?;
    Ok(c_components(admg).into_iter().find(|c| c.contains(&a)).expect("partition covers every node"))
}

/// First child of `a` inside the c-component of `a`, if any.
pub fn identifiability_violation(admg: &Admg, a: usize) -> Result<Option<usize>> {
    let s1 = component_of(admg, a)?;
    Ok(admg.children(a).into_iter().find(|c| s1.contains(c)))
}

/// `P_a` is identified iff no child of `a` lies in the c-component of `a`.
pub fn check_identifiability(admg: &Admg, a: usize) -> Result<bool> {
    let by_component = identifiability_violation(admg, a)?.is_none();
    debug_assert_eq!(by_component, identifiable_by_paths(admg, a)?);
    Ok(by_component)
}

/// The path form: no bidirected path from `a` reaches a child of `a`.
pub fn identifiable_by_paths(admg: &Admg, a: usize) -> Result<bool> {
    admg.check_node(a)?;
    let children = admg.children(a);
    let mut seen = vec![false; admg.n];
    let mut stack = vec![a];
    seen[a] = true;
    while let Some(v) = stack.pop() {
        for &(x, y) in &admg.bidirected {
            let next = if x == v {
                y
            } else if y == v {
                x
            } else {
                continue;
            };
            if !seen[next] {
                if children.contains(&next) {
                    return Ok(false);
                }
                seen[next] = true;
                stack.push(next);
            }
        }
    }
    Ok(true)
}

/// `Pa⁺(S) = S ∪ Pa(S)`, observable parents only, sorted.
pub fn pa_plus(admg: &Admg, s: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = s.to_vec();
    for &v in s {
        out.extend_from_slice(admg.parents(v));
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenSource {
    pub children: [usize; 2],
    pub dist: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Intervention {
    pub node: usize,
    pub value: usize,
}

/// A parent of an observable node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Parent {
    Observed(usize),
    Hidden(usize),
}

/// Causal Bayesian network. Each observable's parent list is its observable
/// parents ascending followed by its hidden parents ascending; CPT rows are
/// indexed by the mixed-radix value of that list, first parent most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cbn {
    names: Vec<String>,
    alphabet: usize,
    admg: Admg,
    hidden: Vec<HiddenSource>,
    parents: Vec<Vec<Parent>>,
    cpt: Vec<Vec<f64>>,
    topo: Vec<usize>,
}

impl Cbn {
    pub fn new(
        names: Vec<String>,
        alphabet: usize,
        directed: Vec<(usize, usize)>,
        hidden: Vec<HiddenSource>,
        cpt: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = names.len();
        if alphabet < 2 {
            return param(format!("alphabet must be at least 2, got {alphabet}"));
        }
        for (h, src) in hidden.iter().enumerate() {
            let [a, b] = src.children;
            if a == b || a >= n || b >= n {
                return param(format!("hidden source {h} must have two distinct observable children"));
            }
            if src.dist.is_empty() || src.dist.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return param(format!("hidden source {h} has an invalid distribution"));
            }
            if (src.dist.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
                return param(format!("hidden source {h} distribution does not sum to 1"));
            }
        }
        let bidirected = hidden.iter().map(|s| (s.children[0], s.children[1])).collect();
        let admg = Admg::new(n, directed, bidirected)?;
        let parents: Vec<Vec<Parent>> = (0..n)
            .map(|i| {
                let mut p: Vec<Parent> = admg.parents(i).iter().map(|&j| Parent::Observed(j)).collect();
                p.extend((0..hidden.len()).filter(|&h| hidden[h].children.contains(&i)).map(Parent::Hidden));
                p
            })
            .collect();
        if cpt.len() != n {
            return param(format!("{} tables for {n} nodes", cpt.len()));
        }
        let mut cbn = Self {
            topo: topological_order(&(0..n).map(|i| admg.parents(i).to_vec()).collect::<Vec<_>>()).expect("acyclic"),
            names,
            alphabet,
            admg,
            hidden,
            parents,
            cpt: Vec::new(),
        };
        for (i, table) in cpt.iter().enumerate() {
            let rows = cbn.rows(i)?;
            if table.len() != rows * alphabet {
                return param(format!("node {i}: table has {} entries, expected {}", table.len(), rows * alphabet));
            }
            for (r, row) in table.chunks(alphabet).enumerate() {
                if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) || (row.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
                    return param(format!("node {i}: row {r} is not a probability vector"));
                }
            }
        }
        cbn.cpt = cpt;
        Ok(cbn)
    }

    /// Random CBN on `Dag::random(n, d)` with `confounders` hidden sources on
    /// distinct random node pairs; all tables Dirichlet(1).
    pub fn random(n: usize, d: usize, confounders: usize, alphabet: usize, rng: &mut dyn RngCore) -> Result<Self> {
        let dag = Dag::random(n, d, rng);
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
        if confounders > pairs.len() {
            return param(format!("{confounders} confounders requested but only {} node pairs", pairs.len()));
        }
        pairs.shuffle(rng);
        let hidden: Vec<HiddenSource> = pairs[..confounders]
            .iter()
            .map(|&(a, b)| HiddenSource { children: [a, b], dist: dirichlet_ones(alphabet, rng) })
            .collect();
        let directed = (0..n).flat_map(|i| dag.parents(i).iter().map(move |&j| (j, i))).collect();
        let cpt = (0..n)
            .map(|i| {
                let confounded = hidden.iter().filter(|h| h.children.contains(&i)).count();
                let rows = alphabet.pow((dag.parents(i).len() + confounded) as u32);
                (0..rows).flat_map(|_| dirichlet_ones(alphabet, rng)).collect()
            })
            .collect();
        Self::new((0..n).map(default_name).collect(), alphabet, directed, hidden, cpt)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn admg(&self) -> &Admg {
        &self.admg
    }

    pub fn hidden(&self) -> &[HiddenSource] {
        &self.hidden
    }

    pub fn parents(&self, i: usize) -> &[Parent] {
        &self.parents[i]
    }

    pub fn table(&self, i: usize) -> &[f64] {
        &self.cpt[i]
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn cardinality(&self, p: Parent) -> usize {
        match p {
            Parent::Observed(_) => self.alphabet,
            Parent::Hidden(h) => self.hidden[h].dist.len(),
        }
    }

    fn rows(&self, i: usize) -> Result<usize> {
        self.parents[i].iter().try_fold(1usize, |acc, &p| {
            acc.checked_mul(self.cardinality(p))
                .filter(|&r| r <= 1 << 26)
                .ok_or_else(|| Error::Parameter(format!("node {i} has too many conditional rows")))
        })
    }

    fn row_index(&self, i: usize, x: &[usize], u: &[usize]) -> usize {
        self.parents[i].iter().fold(0, |acc, &p| {
            let v = match p {
                Parent::Observed(j) => x[j],
                Parent::Hidden(h) => u[h],
            };
            acc * self.cardinality(p) + v
        })
    }

    /// `Pr[X_i = x_i | x_Π(i)]` under hidden values `u`.
    pub fn conditional(&self, i: usize, x: &[usize], u: &[usize]) -> f64 {
        let r = self.row_index(i, x, u);
        self.cpt[i][r * self.alphabet + x[i]]
    }

    /// Assignment bits for enumerating observables and hidden values together.
    pub fn enumeration_bits(&self) -> u32 {
        self.n() as u32 * limits::symbol_bits(self.alphabet)
            + self.hidden.iter().map(|h| limits::symbol_bits(h.dist.len())).sum::<u32>()
    }

    pub fn check_intervention(&self, iv: Intervention) -> Result<()> {
        if iv.node >= self.n() {
            return param(format!("intervention node {} is not observable", iv.node));
        }
        if iv.value >= self.alphabet {
            return param(format!("intervention value {} is outside the alphabet", iv.value));
        }
        Ok(())
    }

    /// Dense mass over `Σ^|V|` in radix order, summing out hidden values.
    /// With an intervention, `A`'s factor is dropped and `x_A ≠ a` gets 0.
    fn dense_mass(&self, iv: Option<Intervention>) -> Result<Vec<f64>> {
        limits::check("causal enumeration", self.enumeration_bits(), limits::CAUSAL_ENUM_BITS)?;
        let n = self.n();
        let k = self.alphabet;
        let mut mass = vec![0.0; k.pow(n as u32)];
        let hidden_sizes: Vec<usize> = self.hidden.iter().map(|h| h.dist.len()).collect();
        for_each_mixed(&hidden_sizes, |u| {
            let pu: f64 = u.iter().enumerate().map(|(h, &v)| self.hidden[h].dist[v]).product();
            if pu == 0.0 {
                return;
            }
            let mut idx = 0;
            for_each_assignment(n, k, |x| {
                let consistent = iv.is_none_or(|iv| x[iv.node] == iv.value);
                if consistent {
                    let mut p = pu;
                    for i in 0..n {
                        if iv.is_some_and(|iv| iv.node == i) {
                            continue;
                        }
                        p *= self.conditional(i, x, u);
                        if p == 0.0 {
                            break;
                        }
                    }
                    mass[idx] += p;
                }
                idx += 1;
            });
        });
        Ok(mass)
    }

    fn distribution_from_dense(&self, mass: Vec<f64>) -> Result<DiscreteDistribution> {
        let mut support = Vec::with_capacity(mass.len());
        for_each_assignment(self.n(), self.alphabet, |x| support.push(x.to_vec()));
        DiscreteDistribution::from_weights(support, mass)
    }

    /// Observational joint on the observables.
    pub fn observational_joint(&self) -> Result<DiscreteDistribution> {
        self.distribution_from_dense(self.dense_mass(None)?)
    }

    /// Ancestral draw of the observables, with `A` fixed when intervened on.
    pub fn sample(&self, iv: Option<Intervention>, rng: &mut dyn RngCore) -> Assignment {
        let u: Vec<usize> = self.hidden.iter().map(|h| draw_from_row(&h.dist, rng)).collect();
        let mut x = vec![0; self.n()];
        for &i in &self.topo {
            x[i] = match iv {
                Some(iv) if iv.node == i => iv.value,
                _ => {
                    let r = self.row_index(i, &x, &u);
                    draw_from_row(&self.cpt[i][r * self.alphabet..(r + 1) * self.alphabet], rng)
                }
            };
        }
        x
    }
}

fn default_name(i: usize) -> String {
    format!("X{i}")
}

/// Visits every vector `u` with `u[h] < sizes[h]`, last coordinate fastest.
fn for_each_mixed(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    let mut u = vec![0; sizes.len()];
    loop {
        f(&u);
        let mut h = sizes.len();
        loop {
            if h == 0 {
                return;
            }
            h -= 1;
            u[h] += 1;
            if u[h] < sizes[h] {
                break;
            }
            u[h] = 0;
        }
    }
}

/// `P_a(x) = Σ_u Π_{i ≠ A} Pr[x_i | x_Π(i)] · Pr[u]` on `{x_A = a}`, 0 elsewhere.
pub fn interventional_distribution(cbn: &Cbn, iv: Intervention) -> Result<DiscreteDistribution> {
    cbn.check_intervention(iv)?;
    cbn.distribution_from_dense(cbn.dense_mass(Some(iv))?)
}

pub fn interventional_sample(cbn: &Cbn, iv: Intervention, rng: &mut dyn RngCore) -> Assignment {
    cbn.sample(Some(iv), rng)
}

/// Sampler for `P_a`.
#[derive(Debug, Clone, Copy)]
pub struct InterventionalSampler<'a> {
    pub cbn: &'a Cbn,
    pub iv: Intervention,
}

impl Sampler<Assignment> for InterventionalSampler<'_> {
    fn draw(&self, rng: &mut dyn RngCore) -> Assignment {
        self.cbn.sample(Some(self.iv), rng)
    }

    fn description(&self) -> String {
        format!("do({} = {})", self.cbn.names[self.iv.node], self.iv.value)
    }
}

/// `min_z P(Z = z)` over all `z ∈ Σ^|Z|` with `Z = Pa⁺(S₁)` and `S₁` the c-component of `a`.
pub fn positivity_margin(cbn: &Cbn, a: usize) -> Result<f64> {
    let z = pa_plus(cbn.admg(), &component_of(cbn.admg(), a)?);
    let joint = cbn.observational_joint()?;
    let k = cbn.alphabet;
    let mut marginal = vec![0.0; k.pow(z.len() as u32)];
    for (x, p) in joint.iter() {
        let idx = z.iter().fold(0, |acc, &v| acc * k + x[v]);
        marginal[idx] += p;
    }
    Ok(marginal.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn check_strong_positivity(cbn: &Cbn, a: usize, alpha: f64) -> Result<bool> {
    Ok(positivity_margin(cbn, a)? > alpha)
}

fn require_identifiable(cbn: &Cbn, a: usize, which: &str) -> Result<()> {
    if let Some(child) = identifiability_violation(cbn.admg(), a)? {
        return Err(Error::Precondition(format!(
            "{which}: child {} of {} lies in its c-component, so the intervention is not identifiable",
            cbn.names[child], cbn.names[a]
        )));
    }
    Ok(())
}

/// Distance between `P_a` and `Q_a` with exact interventional evaluators and
/// samples drawn from `P` under the intervention.
pub fn estimate_tv_interventional(
    p: &Cbn,
    q: &Cbn,
    iv: Intervention,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<TvEstimate> {
    check_compatible(p, q, iv)?;
    let pa = interventional_distribution(p, iv)?;
    let qa = interventional_distribution(q, iv)?;
    estimate_tv(&InterventionalSampler { cbn: p, iv }, &pa, &qa, epsilon, delta, rng)
}

/// Same contract with caller-supplied sampler and evaluators, for models too
/// large to enumerate or learned elsewhere. Slack is taken from the evaluators.
#[allow(clippy::too_many_arguments)]
pub fn estimate_tv_interventional_with(
    p: &Cbn,
    q: &Cbn,
    iv: Intervention,
    sampler: &dyn Sampler<Assignment>,
    eval_p: &dyn EvalApproximator<Assignment>,
    eval_q: &dyn EvalApproximator<Assignment>,
    epsilon: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<TvEstimate> {
    check_compatible(p, q, iv)?;
    estimate_tv(sampler, eval_p, eval_q, epsilon, delta, rng)
}

fn check_compatible(p: &Cbn, q: &Cbn, iv: Intervention) -> Result<()> {
    if p.n() != q.n() || p.alphabet != q.alphabet {
        return param("models have different observables or alphabets");
    }
    p.check_intervention(iv)?;
    require_identifiable(p, iv.node, "P")?;
    require_identifiable(q, iv.node, "Q")
}

// JSON interchange.

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HiddenJson {
    pub children: [String; 2],
    pub dist: Vec<f64>,
}

/// `{"v", "alphabet", "u", "directed", "cpt"}` model file. `cpt` maps each
/// observable name to rows keyed by the parent values `a` in the canonical
/// parent order (observable parents by position in `v`, then hidden parents
/// by position in `u`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CbnJson {
    pub v: Vec<String>,
    pub alphabet: usize,
    #[serde(default)]
    pub u: Vec<HiddenJson>,
    #[serde(default)]
    pub directed: Vec<[String; 2]>,
    pub cpt: BTreeMap<String, Vec<CptEntry>>,
}

impl From<&Cbn> for CbnJson {
    fn from(c: &Cbn) -> Self {
        let name = |i: usize| c.names[i].clone();
        let cpt = (0..c.n())
            .map(|i| {
                let sizes: Vec<usize> = c.parents[i].iter().map(|&p| c.cardinality(p)).collect();
                let mut rows = Vec::new();
                let mut r = 0;
                for_each_mixed(&sizes, |a| {
                    rows.push(CptEntry { a: a.to_vec(), row: c.cpt[i][r * c.alphabet..(r + 1) * c.alphabet].to_vec() });
                    r += 1;
                });
                (name(i), rows)
            })
            .collect();
        Self {
            v: c.names.clone(),
            alphabet: c.alphabet,
            u: c
                .hidden
                .iter()
                .map(|h| HiddenJson { children: [name(h.children[0]), name(h.children[1])], dist: h.dist.clone() })
                .collect(),
            directed: c.admg.directed.iter().map(|&(a, b)| [name(a), name(b)]).collect(),
            cpt,
        }
    }
}

impl TryFrom<CbnJson> for Cbn {
    type Error = Error;

    fn try_from(json: CbnJson) -> Result<Self> {
        let model = |m: String| Error::Model(m);
        let index = |s: &str| {
            json.v
                .iter()
                .position(|v| v == s)
                .ok_or_else(|| model(format!("unknown node name {s:?}")))
        };
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = json.v.iter().find(|v| !seen.insert(v.as_str())) {
            return Err(model(format!("duplicate node name {dup:?}")));
        }
        let directed = json
            .directed
            .iter()
            .map(|[a, b]| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let hidden = json
            .u
            .iter()
            .map(|h| Ok(HiddenSource { children: [index(&h.children[0])?, index(&h.children[1])?], dist: h.dist.clone() }))
            .collect::<Result<Vec<_>>>()?;
        if let Some(extra) = json.cpt.keys().find(|k| !json.v.contains(k)) {
            return Err(model(format!("table for unknown node {extra:?}")));
        }
        // Build the graph once with placeholder tables to learn the parent lists.
        let n = json.v.len();
        let k = json.alphabet;
        if k < 2 {
            return Err(model(format!("alphabet must be at least 2, got {k}")));
        }
        let admg = Admg::new(n, directed.clone(), hidden.iter().map(|h| (h.children[0], h.children[1])).collect())
            .map_err(|e| model(e.to_string()))?;
        let mut cpt = Vec::with_capacity(n);
        for (i, name) in json.v.iter().enumerate() {
            let mut sizes: Vec<usize> = admg.parents(i).iter().map(|_| k).collect();
            sizes.extend(hidden.iter().filter(|h| h.children.contains(&i)).map(|h| h.dist.len()));
            let rows: usize = sizes.iter().product();
            let entries = json.cpt.get(name).ok_or_else(|| model(format!("missing table for {name:?}")))?;
            let mut table = vec![f64::NAN; rows * k];
            let mut filled = vec![false; rows];
            for e in entries {
                if e.a.len() != sizes.len() || e.a.iter().zip(&sizes).any(|(v, s)| v >= s) || e.row.len() != k {
                    return Err(model(format!("{name}: malformed row for parents {:?}", e.a)));
                }
                let r = e.a.iter().zip(&sizes).fold(0, |acc, (v, s)| acc * s + v);
                if std::mem::replace(&mut filled[r], true) {
                    return Err(model(format!("{name}: duplicate row for parents {:?}", e.a)));
                }
                table[r * k..(r + 1) * k].copy_from_slice(&e.row);
            }
            if filled.iter().any(|f| !f) {
                return Err(model(format!("{name}: table is missing rows")));
            }
            cpt.push(table);
        }
        Cbn::new(json.v, k, directed, hidden, cpt).map_err(|e| model(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn admg(n: usize, directed: &[(usize, usize)], bidirected: &[(usize, usize)]) -> Admg {
        Admg::new(n, directed.to_vec(), bidirected.to_vec()).unwrap()
    }

    #[test]
    fn components_examples() {
        assert_eq!(c_components(&admg(3, &[(0, 1)], &[])), vec![vec![0], vec![1], vec![2]]);
        // A..E = 0..4 with A↔C, B↔D, D↔E.
        let g = admg(5, &[(0, 1), (2, 1), (1, 3), (2, 4), (3, 4)], &[(0, 2), (1, 3), (3, 4)]);
        assert_eq!(c_components(&g), vec![vec![0, 2], vec![1, 3, 4]]);
        assert_eq!(g.in_degree(), 2);
    }

    #[test]
    fn identifiability_examples() {
        let plain = admg(2, &[(0, 1)], &[]);
        assert!(check_identifiability(&plain, 0).unwrap());
        let direct = admg(2, &[(0, 1)], &[(0, 1)]);
        assert!(!check_identifiability(&direct, 0).unwrap());
        let path = admg(3, &[(0, 1)], &[(0, 2), (2, 1)]);
        assert!(!check_identifiability(&path, 0).unwrap());
        assert!(!identifiable_by_paths(&path, 0).unwrap());
        let cut = path.without_bidirected(1, 2);
        assert!(check_identifiability(&cut, 0).unwrap());
        assert_eq!(identifiability_violation(&path, 0).unwrap(), Some(1));
        assert!(check_identifiability(&path, 7).is_err());
    }

    #[test]
    fn graph_validation() {
        assert!(Admg::new(2, vec![(0, 1), (1, 0)], vec![]).is_err());
        assert!(Admg::new(2, vec![(0, 0)], vec![]).is_err());
        assert!(Admg::new(2, vec![], vec![(1, 1)]).is_err());
        assert!(Admg::new(2, vec![(0, 2)], vec![]).is_err());
    }

    fn single(row: Vec<f64>) -> Cbn {
        Cbn::new(vec!["A".into()], 2, vec![], vec![], vec![row]).unwrap()
    }

    #[test]
    fn positivity_examples() {
        assert!(check_strong_positivity(&single(vec![0.5, 0.5]), 0, 0.4).unwrap());
        assert!(!check_strong_positivity(&single(vec![1.0, 0.0]), 0, 1e-12).unwrap());
    }

    /// A ← U → B with A → B.
    fn confounded() -> Cbn {
        let hidden = vec![HiddenSource { children: [0, 1], dist: vec![0.5, 0.5] }];
        // A's parents: (U). B's parents: (A, U).
        let a = vec![0.9, 0.1, 0.1, 0.9];
        let b = vec![0.8, 0.2, 0.3, 0.7, 0.6, 0.4, 0.1, 0.9];
        Cbn::new(vec!["A".into(), "B".into()], 2, vec![(0, 1)], hidden, vec![a, b]).unwrap()
    }

    #[test]
    fn confounding_separates_do_from_conditioning() {
        let cbn = confounded();
        let iv = Intervention { node: 0, value: 1 };
        let pa = interventional_distribution(&cbn, iv).unwrap();
        // P_a(B=1) = Σ_u P(u) P(B=1 | A=1, u) = 0.5·0.4 + 0.5·0.9.
        assert_abs_diff_eq!(pa.prob(&vec![1, 1]), 0.65, epsilon = 1e-12);
        assert_eq!(pa.prob(&vec![0, 1]), 0.0);
        let joint = cbn.observational_joint().unwrap();
        let cond = joint.prob(&vec![1, 1]) / (joint.prob(&vec![1, 0]) + joint.prob(&vec![1, 1]));
        // P(B=1 | A=1) weights u by P(u | A=1) = (0.1, 0.9): 0.1·0.4 + 0.9·0.9 = 0.85.
        assert_abs_diff_eq!(cond, 0.85, epsilon = 1e-12);
        // A ↔ B with A → B: not identifiable.
        let err = estimate_tv_interventional(&cbn, &cbn, iv, 0.1, 0.1, &mut rng::stream(0, "c"));
        assert!(matches!(err, Err(Error::Precondition(m)) if m.contains("child B")));
    }

    #[test]
    fn deterministic_sampling() {
        let cbn = Cbn::new(
            vec!["A".into(), "B".into()],
            2,
            vec![(0, 1)],
            vec![],
            vec![vec![0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]],
        )
        .unwrap();
        let mut rng = rng::stream(4, "det");
        assert_eq!(cbn.sample(None, &mut rng), vec![1, 0]);
        assert_eq!(interventional_sample(&cbn, Intervention { node: 0, value: 0 }, &mut rng), vec![0, 1]);
    }

    #[test]
    fn random_models_are_valid_and_round_trip() {
        let mut rng = rng::stream(5, "rand");
        let cbn = Cbn::random(5, 2, 2, 3, &mut rng).unwrap();
        assert_eq!(cbn.hidden().len(), 2);
        let text = serde_json::to_string(&CbnJson::from(&cbn)).unwrap();
        let back = Cbn::try_from(serde_json::from_str::<CbnJson>(&text).unwrap()).unwrap();
        assert_eq!(back, cbn);
        assert!(Cbn::random(3, 1, 4, 2, &mut rng).is_err());
    }

    #[test]
    fn size_guard() {
        let mut rng = rng::stream(6, "guard");
        let big = Cbn::random(23, 1, 0, 2, &mut rng).unwrap();
        assert!(matches!(big.observational_joint(), Err(Error::Size { .. })));
    }
}
