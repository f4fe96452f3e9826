//! Air-to-ground channel over forest: log-distance path loss with a
//! slant-path foliage term, shadowing, channel gains and SINR.
//!
//! Path loss in dB is
//!
//! ```text
//! PL = 20 log10(4 pi f d0 / c) + 10 eta log10(d / d0) + X_sigma + PL_slant
//! PL_slant = A * f_MHz^C * depth_m^E * (theta_deg + G)^H
//! ```
//!
//! and the linear gain is `g = 10^(-PL / 10)`.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Deployment, Point3, UserSet};
use crate::rng::Rng;
use crate::scenario::Scenario;

/// Free-space reference term `20 log10(4 pi f d0 / c)`.
pub fn reference_loss_db(s: &Scenario) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * s.f_hz * s.d0_m / s.c_mps).log10()
}

/// Log-distance term `10 eta log10(d / d0)`.
pub fn distance_loss_db(d_m: f64, s: &Scenario) -> f64 {
    10.0 * s.eta * (d_m / s.d0_m).log10()
}

/// Elevation of `uav` seen from `user`, degrees.
pub fn elevation_deg(uav: Point3, user: Point3) -> f64 {
    let dz = uav.z - user.z;
    let horiz = ((uav.x - user.x).powi(2) + (uav.y - user.y).powi(2)).sqrt();
    dz.atan2(horiz).to_degrees()
}

/// Excess foliage loss along the slant path, dB.
pub fn slant_loss_db(elevation_deg: f64, s: &Scenario) -> Result<f64> {
    if !(elevation_deg > 0.0 && elevation_deg <= 90.0) {
        return Err(Error::InvalidElevation(elevation_deg));
    }
    let f_mhz = s.f_hz / 1e6;
    Ok(s.slant_a
        * f_mhz.powf(s.slant_c)
        * s.foliage_depth_m.powf(s.slant_e)
        * (elevation_deg + s.slant_g).powf(s.slant_h))
}

/// Total path loss in dB between a UAV and a ground user, with a
/// caller-supplied shadowing draw.
pub fn path_loss_db(uav: Point3, user: Point3, s: &Scenario, shadowing_db: f64) -> Result<f64> {
    Ok(link_budget(uav, user, s, shadowing_db)?.pl_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub pl_db: f64,
    pub gain_linear: f64,
    pub d_m: f64,
    pub elevation_deg: f64,
}

pub fn link_budget(uav: Point3, user: Point3, s: &Scenario, shadowing_db: f64) -> Result<LinkBudget> {
    let d_m = distance(uav, user);
    if !(d_m > 0.0) {
        return Err(Error::ZeroDistance);
    }
    let elevation_deg = elevation_deg(uav, user);
    let pl_db =
        reference_loss_db(s) + distance_loss_db(d_m, s) + shadowing_db + slant_loss_db(elevation_deg, s)?;
    Ok(LinkBudget { pl_db, gain_linear: gain_from_loss_db(pl_db), d_m, elevation_deg })
}

pub fn gain_from_loss_db(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 10.0)
}

/// Frozen shadowing draws, one per (UAV index, user) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Shadowing {
    n_users: usize,
    draws_db: Vec<f64>,
}

/// How shadowing enters the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingMode {
    /// `X_sigma = 0` everywhere.
    #[default]
    Expected,
    /// Gaussian draws with standard deviation `sigma_shadow_db`.
    Sampled,
}

impl Shadowing {
    /// Zero shadowing.
    pub fn expected(n_uavs: usize, n_users: usize) -> Self {
        Shadowing { n_users, draws_db: vec![0.0; n_uavs * n_users] }
    }

    pub fn sampled(s: &Scenario, n_uavs: usize, n_users: usize, rng: &Rng) -> Self {
        let mut r = rng.stream();
        let normal = Normal::new(0.0, s.sigma_shadow_db).expect("sigma validated non-negative");
        let draws_db = (0..n_uavs * n_users).map(|_| normal.sample(&mut r)).collect();
        Shadowing { n_users, draws_db }
    }

    pub fn for_mode(mode: ShadowingMode, s: &Scenario, n_uavs: usize, n_users: usize, rng: &Rng) -> Self {
        match mode {
            ShadowingMode::Expected => Self::expected(n_uavs, n_users),
            ShadowingMode::Sampled => Self::sampled(s, n_uavs, n_users, rng),
        }
    }

    pub fn get(&self, uav: usize, user: usize) -> f64 {
        self.draws_db.get(uav * self.n_users + user).copied().unwrap_or(0.0)
    }
}

/// Linear channel gains `g[m][n]`, row-major by UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub n_uavs: usize,
    pub n_users: usize,
    gains: Vec<f64>,
}

impl GainMatrix {
    pub fn compute(d: &Deployment, users: &UserSet, s: &Scenario, shadowing: &Shadowing) -> Result<Self> {
        let mut gains = Vec::with_capacity(d.len() * users.len());
        for (m, &uav) in d.positions.iter().enumerate() {
            for (n, user) in users.points().enumerate() {
                gains.push(link_budget(uav, user, s, shadowing.get(m, n))?.gain_linear);
            }
        }
        Ok(GainMatrix { n_uavs: d.len(), n_users: users.len(), gains })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_uavs = rows.len();
        let n_users = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_users), "ragged gain rows");
        GainMatrix { n_uavs, n_users, gains: rows.into_iter().flatten().collect() }
    }

    #[inline]
    pub fn get(&self, uav: usize, user: usize) -> f64 {
        self.gains[uav * self.n_users + user]
    }
}

fn loads<'a>(n_uavs: usize, links: impl Iterator<Item = &'a [usize]>) -> Vec<usize> {
    let mut load = vec![0usize; n_uavs];
    for l in links {
        for &m in l {
            load[m] += 1;
        }
    }
    load
}

/// Communication-phase SINR of user `n` served by UAV `m`.
///
/// Each UAV splits `p_max` equally over its served users; every other UAV
/// interferes with its own per-user power, and idle UAVs are silent.
pub fn sinr(m: usize, n: usize, gains: &GainMatrix, serving: &[Option<usize>], s: &Scenario) -> Result<f64> {
    if serving.get(n).copied().flatten() != Some(m) {
        return Err(Error::NotAssociated { uav: m, user: n });
    }
    let load = loads(gains.n_uavs, serving.iter().filter_map(|x| x.as_ref().map(std::slice::from_ref)));
    Ok(split_sinr(m, n, gains, &load, &[m], s))
}

/// Localization-phase SINR of user `n` on UAV `m`, a member of the user's
/// TDOA triple. Power is split over each UAV's localization users, and the
/// other members of the triple do not count as interference.
pub fn localization_sinr(
    m: usize,
    n: usize,
    gains: &GainMatrix,
    triples: &[Option<[usize; 3]>],
    s: &Scenario,
) -> Result<f64> {
    let triple = match triples.get(n).copied().flatten() {
        Some(t) if t.contains(&m) => t,
        _ => return Err(Error::NotAssociated { uav: m, user: n }),
    };
    let load = loads(gains.n_uavs, triples.iter().filter_map(|t| t.as_ref().map(|t| &t[..])));
    Ok(split_sinr(m, n, gains, &load, &triple, s))
}

fn split_sinr(m: usize, n: usize, gains: &GainMatrix, load: &[usize], excluded: &[usize], s: &Scenario) -> f64 {
    let signal = s.p_max_w / load[m] as f64 * gains.get(m, n);
    let interference: f64 = (0..gains.n_uavs)
        .filter(|i| !excluded.contains(i) && load[*i] > 0)
        .map(|i| s.p_max_w / load[i] as f64 * gains.get(i, n))
        .sum();
    signal / (interference + s.noise_w())
}
