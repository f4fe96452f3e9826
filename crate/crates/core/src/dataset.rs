//! Offline dataset construction and the Gaussian-enhanced input raster.
//!
//! A dataset is a JSON-Lines file with one optimized episode per line:
//!
//! ```json
//! {"episode":0,"seed":123,"users":[[x,y],...],"uavs":[[x,y,z],...],"fitness":1.25}
//! ```
//!
//! UAVs are stored in canonical order (ascending `x`, then `y`, then `z`).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Shadowing, ShadowingMode};
use crate::error::{Error, Result};
use crate::geometry::{generate_users, is_feasible, Deployment, Point3, UserSet};
use crate::inference::repair;
use crate::metrics::{Evaluator, Fitness};
use crate::optimizer::{optimize, SwarmConfig};
use crate::rng::Rng;
use crate::scenario::Scenario;

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_XI: f64 = 2.0;

/// One optimized episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub episode: usize,
    pub seed: u64,
    pub users: UserSet,
    pub uavs: Deployment,
    pub fitness: f64,
}

/// `L x L` raster, cell `(i, j)` covering x-slot `i` and y-slot `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub size: usize,
    pub xi: f64,
    /// Row-major by `i`.
    pub cells: Vec<f64>,
}

impl RasterGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.size + j]
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.cells.chunks(self.size) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Binary portable graymap, 255 = 1.0.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.size, self.size).into_bytes();
        out.extend(self.cells.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
        out
    }
}

/// Grid cell of a position: `floor(pos / (area / L))`, clamped to the grid.
pub fn cell_of(pos: f64, area: f64, size: usize) -> usize {
    let pitch = area / size as f64;
    let c = (pos / pitch).floor();
    if c < 0.0 {
        0
    } else {
        (c as usize).min(size - 1)
    }
}

/// Gaussian-enhanced occupancy raster: each cell holds the largest
/// `exp(-((i - i_n)^2 + (j - j_n)^2) / (2 xi^2))` over all users.
pub fn rasterize(users: &UserSet, s: &Scenario, size: usize, xi: f64) -> Result<RasterGrid> {
    if size < 2 {
        return Err(Error::Config(format!("grid size must be at least 2, got {size}")));
    }
    if !(xi > 0.0) {
        return Err(Error::Config(format!("gaussian std must be positive, got {xi}")));
    }
    let mut cells = vec![0.0f64; size * size];
    let denom = 2.0 * xi * xi;
    // exp is separable: precompute the 1-D profile for every offset.
    let profile: Vec<f64> = (0..size).map(|d| (-((d * d) as f64) / denom).exp()).collect();
    for &[x, y] in &users.positions {
        let (ci, cj) = (cell_of(x, s.area_x, size), cell_of(y, s.area_y, size));
        for i in 0..size {
            let di = profile[i.abs_diff(ci)];
            let row = &mut cells[i * size..(i + 1) * size];
            for (j, cell) in row.iter_mut().enumerate() {
                let v = di * profile[j.abs_diff(cj)];
                if v > *cell {
                    *cell = v;
                }
            }
        }
    }
    Ok(RasterGrid { size, xi, cells })
}

/// Sorts UAVs ascending by `(x, y, z)`.
pub fn canonical_order(d: &Deployment) -> Deployment {
    let mut p: Vec<Point3> = d.positions.clone();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z)));
    Deployment::new(p)
}

/// Settings for [`build_dataset`].
#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub episodes: usize,
    pub seed: u64,
    pub swarm: SwarmConfig,
    pub shadowing: ShadowingMode,
    /// Worker threads; `0` uses the rayon default.
    pub workers: usize,
}

/// Runs one episode: draw users, optimize, canonicalize.
pub fn run_episode(s: &Scenario, swarm: &SwarmConfig, mode: ShadowingMode, root: &Rng, episode: usize) -> Result<Sample> {
    let ep = root.fork(episode as u64);
    let users = generate_users(s, &ep.fork(0));
    let shadowing = Shadowing::for_mode(mode, s, s.n_uavs, users.len(), &ep.fork(1));
    let result = optimize(&users, s, swarm, &shadowing, &ep.fork(2))?;
    let (uavs, fitness) = if result.best_feasible {
        (result.best, result.best_fitness)
    } else {
        let fixed = repair(&result.best, s)?;
        let fitness = match Evaluator::new(s.clone(), users.clone(), shadowing).fitness(&fixed) {
            Fitness::Feasible(v) => v,
            Fitness::Infeasible => unreachable!("repair returns feasible deployments"),
        };
        (fixed, fitness)
    };
    debug_assert!(is_feasible(&uavs, s));
    Ok(Sample { episode, seed: ep.key(), users, uavs: canonical_order(&uavs), fitness })
}

/// Builds `cfg.episodes` independent samples in episode order. Output is
/// identical for any worker count.
pub fn build_dataset(s: &Scenario, cfg: &DatasetConfig) -> Result<Vec<Sample>> {
    s.validate()?;
    if cfg.episodes == 0 {
        return Err(Error::Config("dataset needs at least one episode".into()));
    }
    let root = Rng::new(cfg.seed);
    let work = || {
        (0..cfg.episodes)
            .into_par_iter()
            .map(|k| {
                run_episode(s, &cfg.swarm, cfg.shadowing, &root, k)
                    .map_err(|e| Error::Episode { episode: k, source: Box::new(e) })
            })
            .collect::<Result<Vec<_>>>()
    };
    if cfg.workers == 0 {
        work()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(work)
    }
}

pub fn write_jsonl<W: Write>(samples: &[Sample], mut w: W) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_jsonl(samples: &[Sample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_jsonl(samples, std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Splits into leading train and trailing test portions, `floor(n * train_frac)`
/// samples going to training.
pub fn split_train_test(samples: &[Sample], train_frac: f64) -> (&[Sample], &[Sample]) {
    let k = ((samples.len() as f64) * train_frac).floor() as usize;
    samples.split_at(k.min(samples.len()))
}
