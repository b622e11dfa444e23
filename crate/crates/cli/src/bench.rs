//! `benchmark`: a grid of parameter-mode estimates with exact oracles.

use rayon::prelude::*;

use tvdist::rng::indexed_stream;

use crate::commands::{estimate_parameter_mode, exact_distance, gen_model, Shape};
use crate::error::CliResult;
use crate::model::{Family, Model};
use crate::report::{Record, CSV_HEADER};

pub struct Grid {
    pub family: Family,
    pub ns: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub shape: Shape,
    pub delta: f64,
    pub seed: u64,
    pub timing: bool,
}

pub struct BenchOutput {
    pub csv: String,
    /// One line per failed cell; empty when every cell succeeded.
    pub errors: Vec<String>,
}

fn cell(grid: &Grid, n: usize, epsilon: f64, trial: usize) -> CliResult<Record> {
    let started = std::time::Instant::now();
    let label = format!("benchmark/{}/n{n}/eps{epsilon}", grid.family.name());
    let mut rng = indexed_stream(grid.seed, &label, trial as u64);
    let shape = Shape { n, d: grid.shape.d.min(n.saturating_sub(1)), ..grid.shape };
    let model_seed = rand::RngCore::next_u64(&mut rng);
    let p = gen_model(grid.family, shape, model_seed)?;
    let q = gen_model(grid.family, shape, model_seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let iv = match &p {
        Model::Causal(c) => Some(tvdist::Intervention { node: first_identifiable(c), value: 0 }),
        _ => None,
    };
    let est = estimate_parameter_mode(&p, &q, iv, epsilon, grid.delta, &mut rng)?;
    let oracle = exact_distance(&p, &q, iv).ok();
    Ok(Record {
        family: grid.family.name().into(),
        n,
        d: p.shape(),
        epsilon,
        samples_used: Some(est.samples_used),
        estimate: Some(est.value),
        oracle_value: oracle,
        wall_time_ms: grid.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
        seed: grid.seed,
    })
}

fn first_identifiable(c: &tvdist::Cbn) -> usize {
    (0..c.n())
        .find(|&a| tvdist::causal::check_identifiability(c.admg(), a).unwrap_or(false))
        .unwrap_or(0)
}

pub fn run(grid: &Grid) -> BenchOutput {
    let cells: Vec<(usize, f64, usize)> = grid
        .ns
        .iter()
        .flat_map(|&n| grid.epsilons.iter().flat_map(move |&e| (0..grid.trials).map(move |t| (n, e, t))))
        .collect();
    let results: Vec<_> = cells.par_iter().map(|&(n, e, t)| (n, e, t, cell(grid, n, e, t))).collect();
    let mut csv = format!("{CSV_HEADER}\n");
    let mut errors = Vec::new();
    for (n, e, t, r) in results {
        match r {
            Ok(rec) => {
                csv.push_str(&rec.csv_row());
                csv.push('\n');
            }
            Err(err) => errors.push(format!("n={n} epsilon={e} trial={t}: {err}")),
        }
    }
    BenchOutput { csv, errors }
}
