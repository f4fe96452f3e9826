//! Benefit-based greedy association (BGAS).
//!
//! Two independent greedy passes run on a fixed deployment:
//!
//! 1. Communication: every unassigned user's benefit is the best SINR among
//!    UAVs with spare capacity whose SINR clears `gamma_C`; the user with the
//!    highest benefit is attached, capacities shrink, benefits are recomputed.
//! 2. Localization: the benefit is the smallest PDOP over UAV triples whose
//!    members all clear `gamma_P` and have spare capacity; the user with the
//!    lowest PDOP is attached first.
//!
//! While the association is being built the final loads are unknown, so
//! admission uses a lower bound on the final SINR: the serving UAV splits
//! power over its load after admission, and every interferer transmits at
//! full `p_max` (its final per-user power can only be lower). A UAV admits a
//! user only if that bound clears the threshold for the newcomer and for all
//! users it already serves. Every committed link therefore meets its SINR
//! constraint in the final association, and feasible sets only shrink as the
//! passes progress. Ties go to the lowest UAV, triple and user index.

use serde::Serialize;

use crate::channel::{self, GainMatrix};
use crate::geometry::{Deployment, UserSet};
use crate::metrics::best_reference;
use crate::scenario::Scenario;

/// Communication and localization association of every user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Association {
    /// Serving UAV per user (the nonzero entry of each column of A).
    pub serving: Vec<Option<usize>>,
    /// Localization triple per user, reference station first (B).
    pub triples: Vec<Option<[usize; 3]>>,
    /// PDOP achieved by each user's triple.
    pub pdop: Vec<Option<f64>>,
    pub remaining_comm_capacity: Vec<usize>,
    pub remaining_loc_capacity: Vec<usize>,
}

impl Association {
    pub fn comm_loads(&self) -> Vec<usize> {
        let mut load = vec![0; self.remaining_comm_capacity.len()];
        for m in self.serving.iter().flatten() {
            load[*m] += 1;
        }
        load
    }

    pub fn loc_loads(&self) -> Vec<usize> {
        let mut load = vec![0; self.remaining_loc_capacity.len()];
        for t in self.triples.iter().flatten() {
            for m in t {
                load[*m] += 1;
            }
        }
        load
    }
}

/// A broken association constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintViolation {
    CommCapacity { uav: usize, load: usize },
    LocCapacity { uav: usize, load: usize },
    /// Triple with a repeated UAV.
    MalformedTriple { user: usize },
    CommSinr { uav: usize, user: usize, sinr: f64 },
    LocSinr { uav: usize, user: usize, sinr: f64 },
}

/// Checks capacities, triple shape and final SINR thresholds.
pub fn audit(a: &Association, gains: &GainMatrix, s: &Scenario) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    for (uav, &load) in a.comm_loads().iter().enumerate() {
        if load > s.k_c {
            out.push(ConstraintViolation::CommCapacity { uav, load });
        }
    }
    for (uav, &load) in a.loc_loads().iter().enumerate() {
        if load > s.k_p {
            out.push(ConstraintViolation::LocCapacity { uav, load });
        }
    }
    for (user, m) in a.serving.iter().enumerate() {
        if let Some(uav) = *m {
            let sinr = channel::sinr(uav, user, gains, &a.serving, s).unwrap_or(0.0);
            if !(sinr > s.gamma_c()) {
                out.push(ConstraintViolation::CommSinr { uav, user, sinr });
            }
        }
    }
    for (user, t) in a.triples.iter().enumerate() {
        if let Some(t) = *t {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                out.push(ConstraintViolation::MalformedTriple { user });
                continue;
            }
            for uav in t {
                let sinr = channel::localization_sinr(uav, user, gains, &a.triples, s).unwrap_or(0.0);
                if !(sinr > s.gamma_p()) {
                    out.push(ConstraintViolation::LocSinr { uav, user, sinr });
                }
            }
        }
    }
    out
}

/// Greedy association state with precomputed link bounds.
#[derive(Debug, Clone)]
pub struct Bgas<'a> {
    s: &'a Scenario,
    n_uavs: usize,
    n_users: usize,
    /// SINR bound at unit load, `[m * n_users + n]`.
    comm_bound: Vec<f64>,
    /// All UAV triples in lexicographic order.
    triples: Vec<[usize; 3]>,
    /// Per (triple, user): best-reference ordering and its PDOP.
    triple_pdop: Vec<([usize; 3], f64)>,
    /// Per (triple, member, user): localization SINR bound at unit load.
    loc_bound: Vec<f64>,
    gamma_c: f64,
    gamma_p: f64,
    comm_load: Vec<usize>,
    comm_min_served: Vec<f64>,
    loc_load: Vec<usize>,
    loc_min_served: Vec<f64>,
    serving: Vec<Option<usize>>,
    assigned: Vec<Option<[usize; 3]>>,
    pdop: Vec<Option<f64>>,
}

impl<'a> Bgas<'a> {
    pub fn new(d: &Deployment, users: &UserSet, s: &'a Scenario, gains: &GainMatrix) -> Self {
        let n_uavs = d.len();
        let n_users = users.len();
        let noise = s.noise_w();
        let p = s.p_max_w;

        let mut comm_bound = vec![0.0; n_uavs * n_users];
        for n in 0..n_users {
            for m in 0..n_uavs {
                let interference: f64 = (0..n_uavs).filter(|&i| i != m).map(|i| p * gains.get(i, n)).sum();
                comm_bound[m * n_users + n] = p * gains.get(m, n) / (interference + noise);
            }
        }

        let mut triples = Vec::new();
        for a in 0..n_uavs {
            for b in a + 1..n_uavs {
                for c in b + 1..n_uavs {
                    triples.push([a, b, c]);
                }
            }
        }
        let mut triple_pdop = Vec::with_capacity(triples.len() * n_users);
        let mut loc_bound = Vec::with_capacity(triples.len() * 3 * n_users);
        for t in &triples {
            for user in users.points() {
                triple_pdop.push(best_reference(*t, user, d));
            }
            for &m in t {
                for n in 0..n_users {
                    let interference: f64 =
                        (0..n_uavs).filter(|i| !t.contains(i)).map(|i| p * gains.get(i, n)).sum();
                    loc_bound.push(p * gains.get(m, n) / (interference + noise));
                }
            }
        }

        Bgas {
            s,
            n_uavs,
            n_users,
            comm_bound,
            triples,
            triple_pdop,
            loc_bound,
            gamma_c: s.gamma_c(),
            gamma_p: s.gamma_p(),
            comm_load: vec![0; n_uavs],
            comm_min_served: vec![f64::INFINITY; n_uavs],
            loc_load: vec![0; n_uavs],
            loc_min_served: vec![f64::INFINITY; n_uavs],
            serving: vec![None; n_users],
            assigned: vec![None; n_users],
            pdop: vec![None; n_users],
        }
    }

    fn comm_admissible(&self, m: usize, n: usize) -> Option<f64> {
        let load = self.comm_load[m];
        if load >= self.s.k_c {
            return None;
        }
        let next = (load + 1) as f64;
        let q = self.comm_bound[m * self.n_users + n] / next;
        (q > self.gamma_c && self.comm_min_served[m] / next > self.gamma_c).then_some(q)
    }

    /// UAVs that could currently serve user `n` for communication.
    pub fn comm_candidates(&self, n: usize) -> Vec<usize> {
        (0..self.n_uavs).filter(|&m| self.comm_admissible(m, n).is_some()).collect()
    }

    /// Communication benefit of user `n`: best admissible SINR bound and the
    /// UAV achieving it.
    pub fn comm_benefit(&self, n: usize) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for m in 0..self.n_uavs {
            if let Some(q) = self.comm_admissible(m, n) {
                if best.is_none_or(|(bq, _)| q > bq) {
                    best = Some((q, m));
                }
            }
        }
        best
    }

    pub fn commit_comm(&mut self, n: usize, m: usize) {
        debug_assert!(self.serving[n].is_none());
        self.serving[n] = Some(m);
        self.comm_load[m] += 1;
        let b = self.comm_bound[m * self.n_users + n];
        self.comm_min_served[m] = self.comm_min_served[m].min(b);
    }

    fn loc_bound_at(&self, t: usize, k: usize, n: usize) -> f64 {
        self.loc_bound[(t * 3 + k) * self.n_users + n]
    }

    fn loc_admissible(&self, t: usize, n: usize) -> bool {
        self.triples[t].iter().enumerate().all(|(k, &m)| {
            let load = self.loc_load[m];
            if load >= self.s.k_p {
                return false;
            }
            let next = (load + 1) as f64;
            self.loc_bound_at(t, k, n) / next > self.gamma_p && self.loc_min_served[m] / next > self.gamma_p
        })
    }

    /// Triples (sorted member indices) that could currently localize user `n`.
    pub fn loc_candidates(&self, n: usize) -> Vec<[usize; 3]> {
        (0..self.triples.len()).filter(|&t| self.loc_admissible(t, n)).map(|t| self.triples[t]).collect()
    }

    /// Localization benefit of user `n`: smallest PDOP over admissible
    /// triples, with the triple ordered reference first.
    pub fn loc_benefit(&self, n: usize) -> Option<(f64, [usize; 3])> {
        self.loc_benefit_indexed(n).map(|(q, t)| (q, self.triple_pdop[t * self.n_users + n].0))
    }

    fn loc_benefit_indexed(&self, n: usize) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for t in 0..self.triples.len() {
            if self.loc_admissible(t, n) {
                let q = self.triple_pdop[t * self.n_users + n].1;
                if best.is_none_or(|(bq, _)| q < bq) {
                    best = Some((q, t));
                }
            }
        }
        best
    }

    /// Attaches user `n` to the triple with sorted members `members`.
    pub fn commit_loc(&mut self, n: usize, members: [usize; 3]) {
        let t = self.triples.iter().position(|x| *x == members).expect("members must be a sorted UAV triple");
        self.commit_loc_indexed(n, t);
    }

    fn commit_loc_indexed(&mut self, n: usize, t: usize) {
        debug_assert!(self.assigned[n].is_none());
        let (ordered, rho) = self.triple_pdop[t * self.n_users + n];
        self.assigned[n] = Some(ordered);
        self.pdop[n] = Some(rho);
        for (k, m) in self.triples[t].into_iter().enumerate() {
            self.loc_load[m] += 1;
            self.loc_min_served[m] = self.loc_min_served[m].min(self.loc_bound_at(t, k, n));
        }
    }

    /// Communication pass: repeatedly attach the user with the highest benefit.
    pub fn run_comm(&mut self) {
        loop {
            let mut pick: Option<(f64, usize, usize)> = None;
            for n in (0..self.n_users).filter(|&n| self.serving[n].is_none()) {
                if let Some((q, m)) = self.comm_benefit(n) {
                    if pick.is_none_or(|(bq, _, _)| q > bq) {
                        pick = Some((q, n, m));
                    }
                }
            }
            match pick {
                Some((_, n, m)) => self.commit_comm(n, m),
                None => break,
            }
        }
    }

    /// Localization pass: repeatedly attach the user with the lowest PDOP.
    pub fn run_loc(&mut self) {
        loop {
            let mut pick: Option<(f64, usize, usize)> = None;
            for n in (0..self.n_users).filter(|&n| self.assigned[n].is_none()) {
                if let Some((q, t)) = self.loc_benefit_indexed(n) {
                    if pick.is_none_or(|(bq, _, _)| q < bq) {
                        pick = Some((q, n, t));
                    }
                }
            }
            match pick {
                Some((_, n, t)) => self.commit_loc_indexed(n, t),
                None => break,
            }
        }
    }

    pub fn finish(self) -> Association {
        Association {
            serving: self.serving,
            triples: self.assigned,
            pdop: self.pdop,
            remaining_comm_capacity: self.comm_load.iter().map(|l| self.s.k_c - l).collect(),
            remaining_loc_capacity: self.loc_load.iter().map(|l| self.s.k_p - l).collect(),
        }
    }
}

/// Runs both greedy passes.
pub fn bgas(d: &Deployment, users: &UserSet, s: &Scenario, gains: &GainMatrix) -> Association {
    let mut state = Bgas::new(d, users, s, gains);
    state.run_comm();
    state.run_loc();
    state.finish()
}
