use rand::Rng as _;

use crate::geometry::{Deployment, Point3, UserSet};
use crate::rng::Rng;
use crate::scenario::Scenario;

/// Height above `h_min` at which KMeans places UAVs.
pub const KMEANS_ALTITUDE_OFFSET_M: f64 = 50.0;

const MAX_LLOYD_ITERS: usize = 100;

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: [f64; 2], centers: &[[f64; 2]]) -> usize {
    let mut best = 0;
    for (k, c) in centers.iter().enumerate().skip(1) {
        if sq_dist(p, *c) < sq_dist(p, centers[best]) {
            best = k;
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding. Returns `min(k, points.len())`
/// centers.
pub fn kmeans(points: &[[f64; 2]], k: usize, rng: &Rng) -> Vec<[f64; 2]> {
    let k = k.min(points.len());
    if k == 0 {
        return Vec::new();
    }
    let mut r = rng.stream();

    let mut centers = vec![points[r.random_range(0..points.len())]];
    while centers.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| sq_dist(*p, centers[nearest(*p, &centers)])).collect();
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = r.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            r.random_range(0..points.len())
        };
        centers.push(points[idx]);
    }

    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..MAX_LLOYD_ITERS {
        let next: Vec<usize> = points.iter().map(|p| nearest(*p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
        let mut sums = vec![[0.0, 0.0]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            } else {
                // Re-seed an empty cluster at the point worst served by its center.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = sq_dist(points[a], centers[assign[a]]);
                        let db = sq_dist(points[b], centers[assign[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("points is non-empty");
                centers[c] = points[far];
                assign[far] = c;
            }
        }
    }
    centers
}

/// KMeans deployment: one UAV per user-cluster center at `h_min + 50 m`.
/// With fewer users than UAVs the surplus UAVs are placed uniformly at random.
pub fn kmeans_init(users: &UserSet, n_uavs: usize, s: &Scenario, rng: &Rng) -> Deployment {
    let z = (s.h_min_m + KMEANS_ALTITUDE_OFFSET_M).min(s.h_max_m);
    let centers = kmeans(&users.positions, n_uavs, &rng.fork(0));
    let mut r = rng.fork(1).stream();
    let mut positions: Vec<Point3> = centers.iter().map(|c| Point3::new(c[0], c[1], z)).collect();
    while positions.len() < n_uavs {
        positions.push(Point3::new(r.random::<f64>() * s.area_x, r.random::<f64>() * s.area_y, z));
    }
    Deployment::new(positions)
}
