//! Per-user ISAC metrics and the swarm fitness.
//!
//! A user's utility mixes normalized throughput with normalized inverse PDOP:
//!
//! ```text
//! chi = lambda * norm(R; 0, R_max) + (1 - lambda) * norm(1/G; 1/rho_max, 1/G_min)
//! ```
//!
//! where `G = min(PDOP, rho_max)` and `norm` is a clamped max-min rescale.

use serde::Serialize;

use crate::association::{bgas, Association};
use crate::channel::{self, GainMatrix, Shadowing};
use crate::error::{Error, Result};
use crate::geometry::{check_feasible, distance, Deployment, Point3, UserSet, Violation};
use crate::scenario::Scenario;

/// Shannon throughput `b * log2(1 + sinr)` in bits/s.
pub fn throughput(b_hz: f64, sinr_linear: f64) -> f64 {
    b_hz * (1.0 + sinr_linear).log2()
}

/// TDOA design matrix for a UAV triple (reference first) and a user.
/// Rows are `v2 - v1` and `v3 - v1` with `v = (uav - user) / |uav - user|`.
pub fn tdoa_matrix(uavs: [Point3; 3], user: Point3) -> Result<[[f64; 3]; 2]> {
    let mut v = [[0.0; 3]; 3];
    for (k, &u) in uavs.iter().enumerate() {
        let d = distance(u, user);
        if !(d > 0.0) {
            return Err(Error::ZeroDistance);
        }
        let diff = u.sub(user);
        v[k] = [diff.x / d, diff.y / d, diff.z / d];
    }
    let row = |k: usize| [v[k][0] - v[0][0], v[k][1] - v[0][1], v[k][2] - v[0][2]];
    Ok([row(1), row(2)])
}

/// `sqrt(tr((H H^T)^-1))` for a 2x3 design matrix; `+inf` when the rows are
/// (numerically) parallel or vanish.
pub fn pdop_from_matrix(h: &[[f64; 3]; 2]) -> f64 {
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let a = dot(&h[0], &h[0]);
    let b = dot(&h[0], &h[1]);
    let c = dot(&h[1], &h[1]);
    let det = a * c - b * b;
    if !(a > 0.0 && c > 0.0) || !(det > 1e-12 * a * c) {
        return f64::INFINITY;
    }
    ((a + c) / det).sqrt()
}

/// PDOP of `user` localized by the UAV triple `triple` (reference first).
pub fn pdop(triple: [usize; 3], user: Point3, d: &Deployment) -> f64 {
    let uavs = triple.map(|m| d.positions[m]);
    match tdoa_matrix(uavs, user) {
        Ok(h) => pdop_from_matrix(&h),
        Err(_) => f64::INFINITY,
    }
}

/// Smallest PDOP over the three choices of reference station. Returns the
/// reordered triple with the chosen reference first; ties keep the earliest
/// reference.
pub fn best_reference(triple: [usize; 3], user: Point3, d: &Deployment) -> ([usize; 3], f64) {
    let [a, b, c] = triple;
    let mut best = ([a, b, c], pdop([a, b, c], user, d));
    for t in [[b, a, c], [c, a, b]] {
        let p = pdop(t, user, d);
        if p < best.1 {
            best = (t, p);
        }
    }
    best
}

/// Capped PDOP.
pub fn localization_score(rho: f64, s: &Scenario) -> f64 {
    if rho <= s.rho_max {
        rho
    } else {
        s.rho_max
    }
}

fn normalize(v: f64, min: f64, max: f64) -> Result<f64> {
    if !(max > min) {
        return Err(Error::DegenerateBounds { min, max });
    }
    Ok(((v - min) / (max - min)).clamp(0.0, 1.0))
}

/// Normalized weighted utility of one user.
pub fn utility(r_n: f64, g_n: f64, s: &Scenario) -> Result<f64> {
    let r = normalize(r_n, 0.0, s.r_norm_ceiling())?;
    let l = normalize(1.0 / g_n, 1.0 / s.rho_max, 1.0 / s.g_norm_min)?;
    Ok(s.lambda_w * r + (1.0 - s.lambda_w) * l)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserMetrics {
    /// Throughput, bits/s.
    pub r_n: f64,
    /// Capped PDOP.
    pub g_n: f64,
    pub chi_n: f64,
    pub serving_uav: Option<usize>,
    pub comm_sinr: Option<f64>,
    pub triple: Option<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub users: Vec<UserMetrics>,
    pub total_utility: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub association: Association,
}

/// Swarm fitness before population-level penalty resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fitness {
    Feasible(f64),
    Infeasible,
}

impl Fitness {
    pub fn is_feasible(self) -> bool {
        matches!(self, Fitness::Feasible(_))
    }
}

/// Replaces every infeasible entry by the population penalty: the minimum
/// feasible value minus one, or `-1` when nothing is feasible.
pub fn resolve_penalties(values: &[Fitness]) -> Vec<f64> {
    let floor = values
        .iter()
        .filter_map(|f| match f {
            Fitness::Feasible(v) => Some(*v),
            Fitness::Infeasible => None,
        })
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let penalty = floor.map_or(-1.0, |m| m - 1.0);
    values
        .iter()
        .map(|f| match f {
            Fitness::Feasible(v) => *v,
            Fitness::Infeasible => penalty,
        })
        .collect()
}

/// Evaluates deployments against a fixed user set and frozen shadowing.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub scenario: Scenario,
    pub users: UserSet,
    pub shadowing: Shadowing,
}

impl Evaluator {
    pub fn new(scenario: Scenario, users: UserSet, shadowing: Shadowing) -> Self {
        Evaluator { scenario, users, shadowing }
    }

    /// Evaluator with zero shadowing.
    pub fn expected(scenario: Scenario, users: UserSet) -> Self {
        let shadowing = Shadowing::expected(scenario.n_uavs, users.len());
        Evaluator { scenario, users, shadowing }
    }

    /// Full report: BGAS association, per-user metrics and feasibility.
    /// Utility is computed even for infeasible deployments.
    pub fn evaluate(&self, d: &Deployment) -> Result<EvaluationReport> {
        let s = &self.scenario;
        let gains = GainMatrix::compute(d, &self.users, s, &self.shadowing)?;
        let association = bgas(d, &self.users, s, &gains);
        let users = self.user_metrics(&gains, &association)?;
        let total_utility = users.iter().map(|u| u.chi_n).sum();
        let violations = check_feasible(d, s);
        Ok(EvaluationReport { users, total_utility, feasible: violations.is_empty(), violations, association })
    }

    /// Utility of `d` under BGAS if it satisfies the altitude and separation
    /// constraints.
    pub fn fitness(&self, d: &Deployment) -> Fitness {
        if !check_feasible(d, &self.scenario).is_empty() {
            return Fitness::Infeasible;
        }
        match self.total_utility(d) {
            Ok(v) => Fitness::Feasible(v),
            Err(_) => Fitness::Infeasible,
        }
    }

    /// Population fitness with penalties resolved.
    pub fn population_fitness(&self, population: &[Deployment]) -> Vec<f64> {
        let raw: Vec<Fitness> = population.iter().map(|d| self.fitness(d)).collect();
        resolve_penalties(&raw)
    }

    fn total_utility(&self, d: &Deployment) -> Result<f64> {
        let gains = GainMatrix::compute(d, &self.users, &self.scenario, &self.shadowing)?;
        let association = bgas(d, &self.users, &self.scenario, &gains);
        Ok(self.user_metrics(&gains, &association)?.iter().map(|u| u.chi_n).sum())
    }

    fn user_metrics(&self, gains: &GainMatrix, a: &Association) -> Result<Vec<UserMetrics>> {
        let s = &self.scenario;
        let comm_load = a.comm_loads();
        (0..self.users.len())
            .map(|n| {
                let (r_n, comm_sinr) = match a.serving[n] {
                    Some(m) => {
                        let g = channel::sinr(m, n, gains, &a.serving, s)?;
                        (throughput(s.b_max_hz / comm_load[m] as f64, g), Some(g))
                    }
                    None => (0.0, None),
                };
                let g_n = match (a.triples[n], a.pdop[n]) {
                    (Some(_), Some(rho)) => localization_score(rho, s),
                    _ => s.rho_max,
                };
                let chi_n = utility(r_n, g_n, s)?;
                Ok(UserMetrics { r_n, g_n, chi_n, serving_uav: a.serving[n], comm_sinr, triple: a.triples[n] })
            })
            .collect()
    }
}
