//! Oracles shared by the integration tests. Nothing here calls into the
//! library's own evaluation code, so agreement is a real cross-check.

#![allow(dead_code)]

use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1};

/// Holding this keeps timed tests from overlapping.
pub fn exclusive() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

pub struct Criterion {
    id: u32,
    title: &'static str,
    limit: Duration,
    start: Instant,
}

impl Criterion {
    pub fn start(id: u32, title: &'static str, limit_secs: u64) -> Self {
        Self { id, title, limit: Duration::from_secs(limit_secs), start: Instant::now() }
    }

    /// Prints one PASS/FAIL line and fails the test unless both the
    /// statistical check and the runtime limit hold.
    pub fn finish(self, ok: bool, detail: String) {
        let elapsed = self.start.elapsed();
        let in_time = elapsed <= self.limit;
        let verdict = if ok && in_time { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict}: {} | {detail} | {:.2}s (limit {}s)",
            self.id,
            self.title,
            elapsed.as_secs_f64(),
            self.limit.as_secs()
        );
        assert!(ok, "criterion {} failed: {detail}", self.id);
        assert!(in_time, "criterion {} exceeded {:?}: {:?}", self.id, self.limit, elapsed);
    }
}

pub fn random_simplex(k: usize, rng: &mut impl RngCore) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| if *b == 0.0 { f64::INFINITY } else { a * (a / b).ln() })
        .sum()
}

/// Composite Simpson rule with `steps` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..steps {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// `½∫∫|f − g|` for two isotropic 2-D Gaussians with unit variance.
pub fn tv_2d_unit(mu_p: [f64; 2], mu_q: [f64; 2]) -> f64 {
    let (lo, hi, steps) = (-10.0, 11.0, 600);
    0.5 * simpson(
        |x| {
            simpson(
                |y| {
                    let f = normal_pdf(x, mu_p[0], 1.0) * normal_pdf(y, mu_p[1], 1.0);
                    let g = normal_pdf(x, mu_q[0], 1.0) * normal_pdf(y, mu_q[1], 1.0);
                    (f - g).abs()
                },
                lo,
                hi,
                steps,
            )
        },
        lo,
        hi,
        steps,
    )
}

/// Brute-force Ising pmf written out from the definition: spin `i` of
/// configuration `idx` is `+1` iff bit `n−1−i` is set, energy sums ordered pairs.
pub fn ising_pmf(a: &[Vec<f64>], theta: &[f64]) -> Vec<f64> {
    let n = a.len();
    let weights: Vec<f64> = (0..1usize << n)
        .map(|idx| {
            let s: Vec<f64> = (0..n).map(|i| if idx >> (n - 1 - i) & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        e += a[i][j] * s[i] * s[j];
                    }
                }
                e += theta[i] * s[i];
            }
            e.exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

pub fn uniform_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}
