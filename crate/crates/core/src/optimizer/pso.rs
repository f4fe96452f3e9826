use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans_init;
use super::schedule::{InertiaSchedule, LearningSchedule};
use crate::channel::Shadowing;
use crate::error::{Error, Result};
use crate::geometry::{Deployment, UserSet};
use crate::metrics::{resolve_penalties, Evaluator, Fitness};
use crate::rng::Rng;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Nonlinear inertia weight and learning factors.
    Dpso,
    /// Constant coefficients.
    Pso,
    /// Nonlinear inertia weight only.
    Dwpso,
    /// Nonlinear learning factors only.
    Dcpso,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Dpso, Variant::Pso, Variant::Dwpso, Variant::Dcpso];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dpso => "dpso",
            Variant::Pso => "pso",
            Variant::Dwpso => "dwpso",
            Variant::Dcpso => "dcpso",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub k_particles: usize,
    pub t_max: usize,
    pub w_ini: f64,
    pub w_end: f64,
    pub c_ini: f64,
    pub c_end: f64,
    /// Per-axis velocity clamp as a fraction of the axis extent.
    pub v_max_frac: f64,
    pub variant: Variant,
    pub static_w: f64,
    pub static_c: f64,
    /// Use the unnormalized `((t_max - t) / t)^1.2` learning-factor form.
    pub literal_learning: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            k_particles: 50,
            t_max: 200,
            w_ini: 0.9,
            w_end: 0.4,
            c_ini: 2.5,
            c_end: 0.5,
            v_max_frac: 0.1,
            variant: Variant::Dpso,
            static_w: 0.7,
            static_c: 2.0,
            literal_learning: false,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSwarmConfig(m.to_string()));
        if self.t_max < 1 {
            return bad("t_max must be at least 1");
        }
        if self.k_particles < 1 {
            return bad("k_particles must be at least 1");
        }
        if !(self.w_ini > self.w_end) {
            return bad("w_ini must exceed w_end");
        }
        if !(self.c_ini > self.c_end) {
            return bad("c_ini must exceed c_end");
        }
        if !(self.v_max_frac > 0.0) {
            return bad("v_max_frac must be positive");
        }
        Ok(())
    }

    pub fn inertia_schedule(&self) -> InertiaSchedule {
        match self.variant {
            Variant::Dpso | Variant::Dwpso => InertiaSchedule::Nonlinear { w_ini: self.w_ini, w_end: self.w_end },
            Variant::Pso | Variant::Dcpso => InertiaSchedule::Constant(self.static_w),
        }
    }

    pub fn learning_schedule(&self) -> LearningSchedule {
        match self.variant {
            Variant::Dpso | Variant::Dcpso if self.literal_learning => {
                LearningSchedule::Literal { c_ini: self.c_ini, c_end: self.c_end }
            }
            Variant::Dpso | Variant::Dcpso => LearningSchedule::Normalized { c_ini: self.c_ini, c_end: self.c_end },
            Variant::Pso | Variant::Dwpso => LearningSchedule::Constant(self.static_c),
        }
    }
}

/// One candidate deployment, flattened to `[x1, y1, z1, x2, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub best_feasible: bool,
}

impl Particle {
    pub fn at_rest(position: Vec<f64>) -> Self {
        Particle {
            velocity: vec![0.0; position.len()],
            best_position: position.clone(),
            position,
            best_fitness: f64::NEG_INFINITY,
            best_feasible: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwarmResult {
    pub best: Deployment,
    pub best_fitness: f64,
    pub best_feasible: bool,
    /// Global-best fitness after each iteration.
    pub convergence_curve: Vec<f64>,
    pub iterations_run: usize,
}

/// Axis bounds of the search box and velocity clamp.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub v_max: [f64; 3],
}

impl Bounds {
    pub fn new(s: &Scenario, v_max_frac: f64) -> Self {
        let (lo, hi) = s.search_box();
        let v_max = [0, 1, 2].map(|k| v_max_frac * (hi[k] - lo[k]));
        Bounds { lo, hi, v_max }
    }
}

/// Velocity and position update of one particle, with `r1, r2 ~ U[0, 1]`
/// drawn per dimension. Velocity is clamped to `+-v_max` and the position to
/// the search box.
pub fn step(p: &mut Particle, global_best: &[f64], w: f64, (c1, c2): (f64, f64), bounds: &Bounds, rng: &Rng) {
    let mut r = rng.stream();
    for k in 0..p.position.len() {
        let axis = k % 3;
        let r1: f64 = r.random();
        let r2: f64 = r.random();
        let x = p.position[k];
        let v = w * p.velocity[k] + c1 * r1 * (p.best_position[k] - x) + c2 * r2 * (global_best[k] - x);
        let v = v.clamp(-bounds.v_max[axis], bounds.v_max[axis]);
        p.velocity[k] = v;
        p.position[k] = (x + v).clamp(bounds.lo[axis], bounds.hi[axis]);
    }
}

// Feasible beats infeasible; otherwise compare values.
fn beats(value: f64, feasible: bool, best: f64, best_feasible: bool) -> bool {
    match (feasible, best_feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => value > best,
    }
}

const INIT: u64 = 0;
const STEP: u64 = 1;

/// Swarm search with the coefficient schedules of `cfg.variant`.
pub fn optimize(users: &UserSet, s: &Scenario, cfg: &SwarmConfig, shadowing: &Shadowing, rng: &Rng) -> Result<SwarmResult> {
    optimize_with(users, s, cfg, shadowing, rng, cfg.inertia_schedule(), cfg.learning_schedule())
}

/// Swarm search with explicit schedules. Particle 0 starts at the KMeans
/// deployment, the rest uniformly in the search box. Each particle and
/// iteration draws from its own substream, so results do not depend on the
/// number of worker threads.
pub fn optimize_with(
    users: &UserSet,
    s: &Scenario,
    cfg: &SwarmConfig,
    shadowing: &Shadowing,
    rng: &Rng,
    inertia: InertiaSchedule,
    learning: LearningSchedule,
) -> Result<SwarmResult> {
    s.validate()?;
    cfg.validate()?;
    let evaluator = Evaluator::new(s.clone(), users.clone(), shadowing.clone());
    let bounds = Bounds::new(s, cfg.v_max_frac);
    let dims = 3 * s.n_uavs;

    let mut swarm: Vec<Particle> = (0..cfg.k_particles)
        .map(|i| {
            let init = rng.fork_path(&[INIT, i as u64]);
            let position = if i == 0 && !users.is_empty() {
                kmeans_init(users, s.n_uavs, s, &init).to_flat()
            } else {
                let mut r = init.stream();
                (0..dims).map(|k| bounds.lo[k % 3] + r.random::<f64>() * (bounds.hi[k % 3] - bounds.lo[k % 3])).collect()
            };
            let position = position.iter().enumerate().map(|(k, x)| x.clamp(bounds.lo[k % 3], bounds.hi[k % 3])).collect();
            Particle::at_rest(position)
        })
        .collect();

    let mut g_pos = swarm[0].position.clone();
    let mut g_fit = f64::NEG_INFINITY;
    let mut g_feasible = false;

    let evaluate_and_update = |swarm: &mut [Particle], g_pos: &mut Vec<f64>, g_fit: &mut f64, g_feasible: &mut bool| {
        let raw: Vec<Fitness> =
            swarm.par_iter().map(|p| evaluator.fitness(&Deployment::from_flat(&p.position))).collect();
        let values = resolve_penalties(&raw);
        for (p, (&v, f)) in swarm.iter_mut().zip(values.iter().zip(&raw)) {
            let feasible = f.is_feasible();
            if beats(v, feasible, p.best_fitness, p.best_feasible) {
                p.best_position.clone_from(&p.position);
                p.best_fitness = v;
                p.best_feasible = feasible;
            }
            if beats(v, feasible, *g_fit, *g_feasible) {
                g_pos.clone_from(&p.position);
                *g_fit = v;
                *g_feasible = feasible;
            }
        }
    };

    evaluate_and_update(&mut swarm, &mut g_pos, &mut g_fit, &mut g_feasible);

    let mut curve = Vec::with_capacity(cfg.t_max);
    for t in 1..=cfg.t_max {
        let w = inertia.at(t, cfg.t_max);
        let c = learning.at(t, cfg.t_max);
        let g_ref = &g_pos;
        swarm
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, p)| step(p, g_ref, w, c, &bounds, &rng.fork_path(&[STEP, t as u64, i as u64])));
        evaluate_and_update(&mut swarm, &mut g_pos, &mut g_fit, &mut g_feasible);
        curve.push(g_fit);
    }

    Ok(SwarmResult {
        best: Deployment::from_flat(&g_pos),
        best_fitness: g_fit,
        best_feasible: g_feasible,
        convergence_curve: curve,
        iterations_run: cfg.t_max,
    })
}
