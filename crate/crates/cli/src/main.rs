mod bench;
mod commands;
mod error;
mod model;
mod report;
mod samples;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Shape, TvInputs, TvSettings};
use error::{CliError, CliResult};
use model::{Family, Model};
use report::{emit, Format};

#[derive(Parser)]
#[command(name = "tvdist", version, about = "Estimate total-variation distance between structured distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the wall_time_ms column (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Clone, Copy)]
struct ShapeArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Maximum in-degree.
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    alphabet: usize,
    /// Ising width bound.
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Ising external field.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Hidden confounders (causal).
    #[arg(long, default_value_t = 0)]
    hidden: usize,
}

impl From<ShapeArgs> for Shape {
    fn from(s: ShapeArgs) -> Self {
        Shape { n: s.n, d: s.d, alphabet: s.alphabet, width: s.width, theta: s.theta, hidden: s.hidden }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random model file.
    GenModel {
        #[arg(long, value_enum)]
        family: Family,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Draw samples from a model file.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// NAME=VALUE intervention (causal models).
        #[arg(long)]
        intervene: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Learn a model from a sample file.
    Learn {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// Bayes-net model file whose DAG and alphabet are used.
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate TV distance from two model files or from sample files.
    EstimateTv {
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        model2: Option<PathBuf>,
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        samples2: Option<PathBuf>,
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long)]
        structure2: Option<PathBuf>,
        #[arg(long)]
        intervene: Option<String>,
        /// Ising width bound for learning.
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Exact TV distance by enumeration (or closed form).
    ExactTv {
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        model2: PathBuf,
        #[arg(long)]
        intervene: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// KL divergence between two Bayes nets on the same DAG.
    EstimateKl {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        model2: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample budgets for a family and size.
    SampleSize {
        #[arg(long, value_enum)]
        family: Family,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Grid of estimates against exact oracles, as CSV.
    Benchmark {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, value_delimiter = ',', default_values_t = vec![3, 4, 5])]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1])]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Boost a weak Bayes-net learner by pairwise votes.
    BoostDemo {
        #[arg(long)]
        model: PathBuf,
        /// Samples per repetition.
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn load_opt(path: Option<&Path>) -> CliResult<Option<Model>> {
    path.map(Model::load).transpose()
}

fn load_samples(path: Option<&Path>, family: Option<Family>) -> CliResult<Option<samples::SampleFile>> {
    path.map(|p| samples::load(p, family)).transpose()
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenModel { family, shape, common } => {
            let model = commands::gen_model(family, shape.into(), common.seed)?;
            emit(common.out.as_deref(), &model.to_json())
        }
        Command::Sample { model, count, intervene, common } => {
            let model = Model::load(&model)?;
            let rows = commands::sample(&model, count, intervene.as_deref(), common.seed)?;
            emit(common.out.as_deref(), &samples::render(model.family(), &rows))
        }
        Command::Learn { samples, family, structure, width, common } => {
            let structure = load_opt(structure.as_deref())?;
            let hint = family.or(structure.as_ref().map(Model::family));
            let file = samples::load(&samples, hint)?;
            let model = commands::learn(&file, structure.as_ref(), width, common.epsilon, common.delta)?;
            emit(common.out.as_deref(), &model.to_json())
        }
        Command::EstimateTv { family, model, model2, samples, samples2, structure, structure2, intervene, width, common } => {
            let (model, model2) = (load_opt(model.as_deref())?, load_opt(model2.as_deref())?);
            let (structure, structure2) = (load_opt(structure.as_deref())?, load_opt(structure2.as_deref())?);
            let hint = family.or(structure.as_ref().map(|_| Family::Bayesnet));
            let samples = load_samples(samples.as_deref(), hint)?;
            let samples2 = load_samples(samples2.as_deref(), hint.or(samples.as_ref().and_then(|s| s.family)))?;
            let inputs = TvInputs {
                family,
                model: model.as_ref(),
                model2: model2.as_ref(),
                samples: samples.as_ref(),
                samples2: samples2.as_ref(),
                structure: structure.as_ref(),
                structure2: structure2.as_ref(),
                intervene: intervene.as_deref(),
                width,
            };
            let settings =
                TvSettings { epsilon: common.epsilon, delta: common.delta, seed: common.seed, timing: common.timing };
            let report = commands::estimate_tv_command(&inputs, &settings)?;
            emit(common.out.as_deref(), &report.render(common.format))
        }
        Command::ExactTv { family, model, model2, intervene, common } => {
            let report = commands::exact_tv_command(&Model::load(&model)?, &Model::load(&model2)?, intervene.as_deref(), family)?;
            emit(common.out.as_deref(), &report.render(common.format))
        }
        Command::EstimateKl { model, model2, common } => {
            let report = commands::estimate_kl_command(&Model::load(&model)?, &Model::load(&model2)?)?;
            emit(common.out.as_deref(), &report.render(common.format))
        }
        Command::SampleSize { family, shape, common } => {
            let report = commands::sample_size_command(family, shape.into(), common.epsilon, common.delta)?;
            emit(common.out.as_deref(), &report.render(common.format))
        }
        Command::Benchmark { family, ns, epsilons, trials, shape, common } => {
            let grid = bench::Grid {
                family,
                ns,
                epsilons,
                trials,
                shape: shape.into(),
                delta: common.delta,
                seed: common.seed,
                timing: common.timing,
            };
            let output = bench::run(&grid);
            emit(common.out.as_deref(), &output.csv)?;
            if !output.errors.is_empty() {
                let text: String = output.errors.iter().map(|e| format!("{e}\n")).collect();
                match &common.out {
                    Some(out) => {
                        let mut sidecar = out.clone().into_os_string();
                        sidecar.push(".errors");
                        std::fs::write(PathBuf::from(sidecar), text)?;
                    }
                    None => eprint!("{text}"),
                }
                log::warn!("{} benchmark cells failed", output.errors.len());
            }
            Ok(())
        }
        Command::BoostDemo { model, count, common } => {
            let report = commands::boost_demo_command(&Model::load(&model)?, count, common.epsilon, common.delta, common.seed)?;
            emit(common.out.as_deref(), &report.render(common.format))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let e: CliError = e;
            eprintln!("{e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
