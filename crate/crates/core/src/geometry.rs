//! Points, user sets, deployments and the deployment feasibility check.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::scenario::Scenario;

/// A point in meters. Ground users sit at `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn ground(x: f64, y: f64) -> Self {
        Point3 { x, y, z: 0.0 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

/// Euclidean distance.
pub fn distance(a: Point3, b: Point3) -> f64 {
    a.sub(b).norm()
}

/// Ground user positions `(x, y)`, serialized as a JSON array of pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserSet {
    pub positions: Vec<[f64; 2]>,
}

impl UserSet {
    pub fn new(positions: Vec<[f64; 2]>) -> Self {
        UserSet { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn point(&self, n: usize) -> Point3 {
        let [x, y] = self.positions[n];
        Point3::ground(x, y)
    }

    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        self.positions.iter().map(|&[x, y]| Point3::ground(x, y))
    }

    pub fn inside(&self, s: &Scenario) -> bool {
        self.positions
            .iter()
            .all(|&[x, y]| (0.0..=s.area_x).contains(&x) && (0.0..=s.area_y).contains(&y))
    }
}

/// Draws `s.n_users` positions i.i.d. uniform over the area rectangle.
pub fn generate_users(s: &Scenario, rng: &Rng) -> UserSet {
    let mut r = rng.stream();
    let positions = (0..s.n_users)
        .map(|_| [r.random::<f64>() * s.area_x, r.random::<f64>() * s.area_y])
        .collect();
    UserSet { positions }
}

/// Ordered UAV positions; the swarm's decision variable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Deployment {
    pub positions: Vec<Point3>,
}

impl Deployment {
    pub fn new(positions: Vec<Point3>) -> Self {
        Deployment { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Flattened `[x1, y1, z1, x2, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| p.to_array()).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert_eq!(flat.len() % 3, 0, "flat deployment length must be a multiple of 3");
        Deployment { positions: flat.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|p| p.is_finite())
    }
}

/// A violated deployment constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Two UAVs closer than `d_min`.
    Separation { a: usize, b: usize, distance: f64 },
    /// UAV below `h_min`.
    Altitude { uav: usize, z: f64 },
}

/// Every separation and altitude violation of `d`. Empty means feasible.
/// Both bounds are inclusive.
pub fn check_feasible(d: &Deployment, s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let p = &d.positions;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            let dist = distance(p[a], p[b]);
            if !(dist >= s.d_min_m) {
                out.push(Violation::Separation { a, b, distance: dist });
            }
        }
    }
    for (uav, q) in p.iter().enumerate() {
        if !(q.z >= s.h_min_m) {
            out.push(Violation::Altitude { uav, z: q.z });
        }
    }
    out
}

pub fn is_feasible(d: &Deployment, s: &Scenario) -> bool {
    check_feasible(d, s).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::rng::Rng;

    #[test]
    fn distance_examples() {
        let o = Point3::default();
        assert_eq!(distance(o, o), 0.0);
        assert_eq!(distance(o, Point3::new(3.0, 4.0, 0.0)), 5.0);
        // 300-400-500 right triangle
        assert_eq!(distance(Point3::new(100.0, 200.0, 50.0), Point3::new(400.0, 600.0, 50.0)), 500.0);
    }

    #[test]
    fn empty_user_set() {
        let s = Scenario { n_users: 0, ..Default::default() };
        assert!(generate_users(&s, &Rng::new(1)).is_empty());
    }

    #[test]
    fn users_are_reproducible_and_inside() {
        let s = Scenario { n_users: 30, ..Default::default() };
        let a = generate_users(&s, &Rng::new(7));
        let b = generate_users(&s, &Rng::new(7));
        assert_eq!(a, b);
        assert!(a.inside(&s));
        assert_ne!(a, generate_users(&s, &Rng::new(8)));
    }

    #[test]
    fn user_mean_is_central() {
        let s = Scenario { n_users: 1000, ..Default::default() };
        for seed in [1, 2, 3] {
            let u = generate_users(&s, &Rng::new(seed));
            let (mx, my) = u
                .positions
                .iter()
                .fold((0.0, 0.0), |(ax, ay), p| (ax + p[0] / 1000.0, ay + p[1] / 1000.0));
            assert!((mx - 2500.0).abs() < 0.05 * 2500.0, "mean x {mx}");
            assert!((my - 2500.0).abs() < 0.05 * 2500.0, "mean y {my}");
        }
    }

    #[test]
    fn separation_boundary_is_inclusive() {
        let s = Scenario::default();
        let d = Deployment::new(vec![Point3::new(0.0, 0.0, 100.0), Point3::new(100.0, 0.0, 100.0)]);
        assert!(check_feasible(&d, &s).is_empty());
    }

    #[test]
    fn altitude_violation() {
        let s = Scenario::default();
        let d = Deployment::new(vec![Point3::new(0.0, 0.0, 49.9)]);
        assert_eq!(check_feasible(&d, &s), vec![Violation::Altitude { uav: 0, z: 49.9 }]);
    }

    #[test]
    fn stacked_uavs_violate_every_pair() {
        let s = Scenario::default();
        let d = Deployment::new(vec![Point3::new(10.0, 10.0, 100.0); 5]);
        let v = check_feasible(&d, &s);
        assert_eq!(v.len(), 10);
        assert!(v.iter().all(|v| matches!(v, Violation::Separation { .. })));
    }

    #[test]
    fn flat_round_trip() {
        let d = Deployment::new(vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]);
        assert_eq!(d.to_flat(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(Deployment::from_flat(&d.to_flat()), d);
    }

    fn pt() -> impl Strategy<Value = Point3> {
        (-1e4..1e4f64, -1e4..1e4f64, -1e3..1e3f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in pt(), b in pt(), c in pt()) {
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        }

        #[test]
        fn feasibility_ignores_order(
            pts in proptest::collection::vec((0.0..600.0f64, 0.0..600.0f64, 0.0..120.0f64), 2..7),
            rot in 0usize..7,
        ) {
            let s = Scenario::default();
            let mut p: Vec<Point3> = pts.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
            let before = check_feasible(&Deployment::new(p.clone()), &s);
            let k = rot % p.len();
            p.rotate_left(k);
            p.reverse();
            let after = check_feasible(&Deployment::new(p), &s);
            prop_assert_eq!(before.len(), after.len());
            prop_assert_eq!(before.is_empty(), after.is_empty());
        }
    }
}
