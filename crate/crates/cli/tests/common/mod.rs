#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use tvdist::bayesnet::BayesNetJson;
use tvdist::rng::stream;
use tvdist::{exact_tv, BayesNet, Dag};

pub fn tvdist<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_tvdist"))
        .args(args)
        .env_remove("TVDIST_MAX_ENUM_BITS")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

/// Runs and asserts success, returning stdout.
pub fn ok<I, S>(args: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = tvdist(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn field(report: &str, key: &str) -> Option<String> {
    report.lines().find_map(|l| l.strip_prefix(&format!("{key}: ")).map(str::to_string))
}

pub fn num(report: &str, key: &str) -> f64 {
    field(report, key).unwrap_or_else(|| panic!("no {key} in {report}")).parse().unwrap()
}

pub fn write_bn(path: &Path, bn: &BayesNet) {
    let mut v = serde_json::to_value(BayesNetJson::from(bn)).unwrap();
    v.as_object_mut().unwrap().insert("family".into(), "bayesnet".into());
    std::fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn mix(p: &BayesNet, r: &BayesNet, lambda: f64) -> BayesNet {
    let cpt = p
        .tables()
        .iter()
        .zip(r.tables())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect())
        .collect();
    BayesNet::new(p.dag().clone(), p.alphabet(), cpt).unwrap()
}

/// Binary chain pair on 4 nodes whose exact distance is `target`, found by
/// bisection along a row-wise mixture.
pub fn bn_pair_at(target: f64, seed: u64) -> (BayesNet, BayesNet) {
    let dag = Dag::chain(4);
    let mut rng = stream(seed, "cli-bn-pair");
    let p = BayesNet::random(dag.clone(), 2, &mut rng).unwrap();
    let jp = p.joint().unwrap();
    let far = loop {
        let r = BayesNet::random(dag.clone(), 2, &mut rng).unwrap();
        if exact_tv(&jp, &r.joint().unwrap()) > target {
            break r;
        }
    };
    let tv_at = |l: f64| exact_tv(&jp, &mix(&p, &far, l).joint().unwrap());
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tv_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (p.clone(), mix(&p, &far, hi))
}

pub struct Criterion {
    id: u32,
    title: &'static str,
    start: Instant,
}

impl Criterion {
    pub fn start(id: u32, title: &'static str) -> Self {
        Self { id, title, start: Instant::now() }
    }

    /// Prints one PASS/FAIL line, then fails the test on FAIL.
    pub fn finish(self, ok: bool, detail: String) {
        let verdict = if ok { "PASS" } else { "FAIL" };
        let secs = self.start.elapsed().as_secs_f64();
        println!("criterion {:>2} {verdict}: {} | {detail} | {secs:.2}s", self.id, self.title);
        assert!(ok, "criterion {} failed: {detail}", self.id);
    }
}
