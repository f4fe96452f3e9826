use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use isac_deploy::dataset::{build_dataset, rasterize, read_jsonl, save_jsonl, split_train_test, DatasetConfig, Sample};
use isac_deploy::geometry::{generate_users, is_feasible};
use isac_deploy::inference::{decode, infer_deployment, load_weights, repair, Network};
use isac_deploy::metrics::EvaluationReport;
use isac_deploy::optimizer::kmeans_init;
use isac_deploy::{optimize, Deployment, Error, Evaluator, Result, Rng, Scenario, Shadowing, UserSet};
use serde::Serialize;

use crate::args::{Algo, GridFormat, ScenarioArgs, Shadow, SwarmArgs};
use crate::io::{emit, emit_json, read_deployment, read_users};

/// Per-episode fork layout shared with the dataset generator. `benchmark`
/// rebuilds each sample's node from its stored seed with the same layout.
const USERS_FORK: u64 = 0;
const SHADOW_FORK: u64 = 1;
const SOLVER_FORK: u64 = 2;

fn shadowing_for(mode: Shadow, s: &Scenario, users: &UserSet, node: &Rng) -> Shadowing {
    Shadowing::for_mode(mode.into(), s, s.n_uavs, users.len(), &node.fork(SHADOW_FORK))
}

#[derive(Debug, Args)]
pub struct GenDataset {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub swarm: SwarmArgs,
    /// Number of episodes
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Shadow::Expected)]
    pub shadowing: Shadow,
    /// JSONL output (the training part when --test-out is given)
    #[arg(long)]
    pub out: PathBuf,
    /// Also split off a held-out JSONL file
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// Fraction of episodes kept for training when splitting
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
}

pub fn gen_dataset(a: &GenDataset) -> Result<()> {
    let s = a.scenario.resolve()?;
    let cfg = DatasetConfig {
        episodes: a.episodes,
        seed: a.seed,
        swarm: a.swarm.config(isac_deploy::Variant::Dpso)?,
        shadowing: a.shadowing.into(),
        workers: a.workers,
    };
    let samples = build_dataset(&s, &cfg)?;
    match &a.test_out {
        None => save_jsonl(&samples, &a.out),
        Some(test_path) => {
            if !(0.0..=1.0).contains(&a.train_frac) {
                return Err(Error::Config(format!("train fraction {} outside [0, 1]", a.train_frac)));
            }
            let (train, test) = split_train_test(&samples, a.train_frac);
            save_jsonl(train, &a.out)?;
            save_jsonl(test, test_path)
        }
    }
}

#[derive(Debug, Args)]
pub struct Optimize {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub swarm: SwarmArgs,
    #[arg(long, value_enum, default_value_t = Algo::Dpso)]
    pub algo: Algo,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// User positions (JSON); generated from the seed when omitted
    #[arg(long)]
    pub users: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Shadow::Expected)]
    pub shadowing: Shadow,
    /// Deployment JSON output; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Convergence curve CSV (swarm algorithms only)
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct OptimizeOutput<'a> {
    algo: &'static str,
    seed: u64,
    users: &'a UserSet,
    uavs: &'a Deployment,
    fitness: f64,
    feasible: bool,
    iterations: usize,
}

pub fn optimize_cmd(a: &Optimize) -> Result<()> {
    let s = a.scenario.resolve()?;
    let node = Rng::new(a.seed);
    let users = match &a.users {
        Some(path) => read_users(path)?,
        None => generate_users(&s, &node.fork(USERS_FORK)),
    };
    let shadowing = shadowing_for(a.shadowing, &s, &users, &node);
    let rng = node.fork(SOLVER_FORK);
    let (uavs, fitness, feasible, iterations, curve) = match a.algo.variant() {
        Some(variant) => {
            let r = optimize(&users, &s, &a.swarm.config(variant)?, &shadowing, &rng)?;
            (r.best, r.best_fitness, r.best_feasible, r.iterations_run, Some(r.convergence_curve))
        }
        None if a.algo == Algo::Kmeans => {
            let d = kmeans_init(&users, s.n_uavs, &s, &rng);
            let report = Evaluator::new(s.clone(), users.clone(), shadowing).evaluate(&d)?;
            (d, report.total_utility, report.feasible, 0, None)
        }
        None => return Err(Error::Config("optimize does not run the cnn; use `infer`".into())),
    };
    if let Some(path) = &a.curve {
        let Some(curve) = curve else {
            return Err(Error::Config(format!("{} has no convergence curve", a.algo.name())));
        };
        let mut csv = String::from("iteration,best_fitness\n");
        for (t, v) in curve.iter().enumerate() {
            let _ = writeln!(csv, "{t},{v}");
        }
        emit(Some(path), csv.as_bytes())?;
    }
    let out = OptimizeOutput { algo: a.algo.name(), seed: a.seed, users: &users, uavs: &uavs, fitness, feasible, iterations };
    emit_json(a.out.as_deref(), &out)
}

#[derive(Debug, Args)]
pub struct Evaluate {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub users: PathBuf,
    #[arg(long)]
    pub deployment: PathBuf,
    #[arg(long, value_enum, default_value_t = Shadow::Expected)]
    pub shadowing: Shadow,
    /// Seed of the shadowing draw (sampled mode)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn evaluate(a: &Evaluate) -> Result<()> {
    let s = a.scenario.resolve()?;
    let users = read_users(&a.users)?;
    let d = read_deployment(&a.deployment)?;
    let shadowing = shadowing_for(a.shadowing, &s, &users, &Rng::new(a.seed));
    let report = Evaluator::new(s, users, shadowing).evaluate(&d)?;
    emit_json(a.out.as_deref(), &report)
}

#[derive(Debug, Args)]
pub struct Rasterize {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub users: PathBuf,
    /// Grid side L
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Gaussian spread, in cells
    #[arg(long, default_value_t = 2.0)]
    pub xi: f64,
    #[arg(long, value_enum, default_value_t = GridFormat::Csv)]
    pub format: GridFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn rasterize_cmd(a: &Rasterize) -> Result<()> {
    let s = a.scenario.resolve()?;
    let grid = rasterize(&read_users(&a.users)?, &s, a.grid, a.xi)?;
    match a.format {
        GridFormat::Csv => emit(a.out.as_deref(), grid.to_csv().as_bytes()),
        GridFormat::Pgm => emit(a.out.as_deref(), &grid.to_pgm()),
    }
}

#[derive(Debug, Args)]
pub struct Infer {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub users: PathBuf,
    /// Push the decoded deployment onto the feasible set
    #[arg(long)]
    pub repair: bool,
    /// Attach an evaluation report (expected shadowing)
    #[arg(long)]
    pub evaluate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct InferOutput {
    uavs: Deployment,
    normalized: Vec<f64>,
    repaired: bool,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<EvaluationReport>,
}

pub fn infer(a: &Infer) -> Result<()> {
    let s = a.scenario.resolve()?;
    let net = Network::new(&load_weights(&a.weights)?)?;
    let h = *net.header();
    h.check_scenario(&s)?;
    let users = read_users(&a.users)?;
    let grid = rasterize(&users, &s, h.grid as usize, h.xi)?;
    let decoded = decode(&net.forward(&grid)?, &h)?;
    let uavs = if a.repair { repair(&decoded.deployment, &s)? } else { decoded.deployment.clone() };
    let report = if a.evaluate { Some(Evaluator::expected(s.clone(), users).evaluate(&uavs)?) } else { None };
    let out = InferOutput {
        repaired: uavs != decoded.deployment,
        feasible: is_feasible(&uavs, &s),
        uavs,
        normalized: decoded.normalized,
        report,
    };
    emit_json(a.out.as_deref(), &out)
}

#[derive(Debug, Args)]
pub struct Benchmark {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub swarm: SwarmArgs,
    /// Held-out dataset (JSONL)
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "kmeans,pso,dpso,cnn")]
    pub algos: Vec<Algo>,
    /// Weight file, required for `cnn`
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Use only the first N samples
    #[arg(long)]
    pub limit: Option<usize>,
    /// Shadowing the samples were generated under
    #[arg(long, value_enum, default_value_t = Shadow::Expected)]
    pub shadowing: Shadow,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Row {
    algo: &'static str,
    samples: usize,
    utility: f64,
    seconds: f64,
}

/// Solves one sample with `algo`. Infeasible answers are repaired as part of
/// the solve, so every algorithm is scored on a feasible deployment.
fn solve(algo: Algo, sample: &Sample, s: &Scenario, a: &Benchmark, net: Option<&Network>, shadowing: &Shadowing) -> Result<Deployment> {
    let rng = Rng::from_key(sample.seed).fork(SOLVER_FORK);
    let d = match (algo.variant(), net) {
        (Some(variant), _) => optimize(&sample.users, s, &a.swarm.config(variant)?, shadowing, &rng)?.best,
        (None, _) if algo == Algo::Kmeans => kmeans_init(&sample.users, s.n_uavs, s, &rng),
        (None, Some(net)) => infer_deployment(&sample.users, s, net, false)?,
        (None, None) => unreachable!("cnn is checked for weights up front"),
    };
    if is_feasible(&d, s) {
        Ok(d)
    } else {
        repair(&d, s)
    }
}

pub fn benchmark(a: &Benchmark) -> Result<()> {
    let s = a.scenario.resolve()?;
    let mut samples = read_jsonl(&a.data)?;
    if let Some(n) = a.limit {
        samples.truncate(n);
    }
    if samples.is_empty() {
        return Err(Error::Config(format!("{} holds no samples", a.data.display())));
    }
    let net = match (&a.weights, a.algos.contains(&Algo::Cnn)) {
        (Some(path), true) => {
            let net = Network::new(&load_weights(path)?)?;
            net.header().check_scenario(&s)?;
            Some(net)
        }
        (None, true) => return Err(Error::Config("algo cnn needs --weights".into())),
        (_, false) => None,
    };
    let mut rows = Vec::new();
    for &algo in &a.algos {
        let mut row = Row { algo: algo.name(), samples: samples.len(), utility: 0.0, seconds: 0.0 };
        for sample in &samples {
            let node = Rng::from_key(sample.seed);
            let shadowing = shadowing_for(a.shadowing, &s, &sample.users, &node);
            let start = Instant::now();
            let d = solve(algo, sample, &s, a, net.as_ref(), &shadowing)?;
            row.seconds += start.elapsed().as_secs_f64();
            row.utility += Evaluator::new(s.clone(), sample.users.clone(), shadowing).evaluate(&d)?.total_utility;
        }
        rows.push(row);
    }
    emit(a.out.as_deref(), benchmark_csv(&rows).as_bytes())
}

fn benchmark_csv(rows: &[Row]) -> String {
    let mut csv = String::from("algo,samples,mean_utility,mean_seconds\n");
    for r in rows {
        let n = r.samples as f64;
        let _ = writeln!(csv, "{},{},{},{}", r.algo, r.samples, r.utility / n, r.seconds / n);
    }
    csv
}
