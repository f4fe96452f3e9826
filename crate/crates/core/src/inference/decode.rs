//! Network output <-> deployment mapping, and feasibility repair.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::bundle::Header;
use crate::error::{Error, Result};
use crate::geometry::{check_feasible, distance, Deployment, Point3};
use crate::rng::Rng;
use crate::scenario::Scenario;

/// Sweep cap for [`repair`].
pub const MAX_REPAIR_SWEEPS: usize = 100;

/// Pairs are pushed slightly beyond `d_min` so that rounding never leaves
/// them a hair short.
const SEPARATION_SLACK: f64 = 1e-9;

const JITTER_SEED: u64 = 0x5EED_0F_7E9A12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedDeployment {
    pub deployment: Deployment,
    /// Clamped network outputs, `[x1, y1, z1, x2, ...]`.
    pub normalized: Vec<f64>,
}

/// Maps `3M` outputs to UAV positions. Outputs are clamped to `[0, 1]`.
pub fn decode(outputs: &[f32], h: &Header) -> Result<DecodedDeployment> {
    let m = h.n_uavs as usize;
    if outputs.len() != 3 * m {
        return Err(Error::DimensionMismatch { expected: 3 * m, got: outputs.len() });
    }
    let normalized: Vec<f64> = outputs.iter().map(|&v| (v as f64).clamp(0.0, 1.0)).collect();
    let positions = normalized
        .chunks_exact(3)
        .map(|u| Point3::new(u[0] * h.area_x, u[1] * h.area_y, h.h_min + u[2] * (h.h_max - h.h_min)))
        .collect();
    Ok(DecodedDeployment { deployment: Deployment::new(positions), normalized })
}

/// Inverse of [`decode`] for positions inside the header's box.
pub fn encode(d: &Deployment, h: &Header) -> Vec<f64> {
    d.positions
        .iter()
        .flat_map(|p| [p.x / h.area_x, p.y / h.area_y, (p.z - h.h_min) / (h.h_max - h.h_min)])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RepairStats {
    pub altitude_fixes: usize,
    pub sweeps: usize,
    pub pair_moves: usize,
}

/// Makes `d` satisfy the altitude floor and pairwise separation.
pub fn repair(d: &Deployment, s: &Scenario) -> Result<Deployment> {
    repair_with_stats(d, s).map(|(d, _)| d)
}

/// [`repair`] that also reports how much work was needed.
///
/// Altitudes below `h_min` are raised to it. Then, until a sweep finds no
/// violating pair, every pair closer than `d_min` is pushed apart
/// symmetrically about its midpoint to `d_min`. Coincident UAVs are split
/// along a deterministic pseudo-random horizontal direction. A push that
/// would drop a UAV below `h_min` lifts the whole pair instead.
pub fn repair_with_stats(d: &Deployment, s: &Scenario) -> Result<(Deployment, RepairStats)> {
    let mut p = d.positions.clone();
    let mut stats = RepairStats::default();
    for q in &mut p {
        if !(q.z >= s.h_min_m) {
            q.z = s.h_min_m;
            stats.altitude_fixes += 1;
        }
    }
    let target = s.d_min_m * (1.0 + SEPARATION_SLACK);
    let jitter = Rng::new(JITTER_SEED);
    loop {
        let mut moved = false;
        for a in 0..p.len() {
            for b in a + 1..p.len() {
                let dist = distance(p[a], p[b]);
                if dist >= s.d_min_m {
                    continue;
                }
                moved = true;
                stats.pair_moves += 1;
                let dir = if dist > 1e-9 * s.d_min_m.max(1.0) {
                    let v = p[b].sub(p[a]);
                    [v.x / dist, v.y / dist, v.z / dist]
                } else {
                    let angle: f64 = jitter
                        .fork_path(&[stats.sweeps as u64, a as u64, b as u64])
                        .stream()
                        .random_range(0.0..std::f64::consts::TAU);
                    [angle.cos(), angle.sin(), 0.0]
                };
                let mid = [(p[a].x + p[b].x) / 2.0, (p[a].y + p[b].y) / 2.0, (p[a].z + p[b].z) / 2.0];
                let h = target / 2.0;
                let (za, zb) = (mid[2] - h * dir[2], mid[2] + h * dir[2]);
                let lift = (s.h_min_m - za.min(zb)).max(0.0);
                p[a] = Point3::new(mid[0] - h * dir[0], mid[1] - h * dir[1], za + lift);
                p[b] = Point3::new(mid[0] + h * dir[0], mid[1] + h * dir[1], zb + lift);
            }
        }
        if !moved {
            break;
        }
        stats.sweeps += 1;
        if stats.sweeps >= MAX_REPAIR_SWEEPS {
            let out = Deployment::new(p.clone());
            if check_feasible(&out, s).is_empty() {
                break;
            }
            return Err(Error::RepairDidNotConverge { sweeps: stats.sweeps });
        }
    }
    Ok((Deployment::new(p), stats))
}
