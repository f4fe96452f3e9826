//! Learned deployment: weight file, forward pass, decoding and repair.
//!
//! The pipeline is `rasterize -> forward -> decode -> repair`; see
//! [`infer_deployment`].

mod bundle;
mod decode;
mod network;

pub use bundle::{load_weights, next_shape, Header, Layer, Shape, WeightBundle, Widths, MAGIC, VERSION};
pub use decode::{decode, encode, repair, repair_with_stats, DecodedDeployment, RepairStats, MAX_REPAIR_SWEEPS};
pub use network::{forward, Network};

use crate::dataset::rasterize;
use crate::error::{Error, Result};
use crate::geometry::{Deployment, UserSet};
use crate::scenario::Scenario;

impl Header {
    /// Checks that the file was trained for this scenario's geometry.
    pub fn check_scenario(&self, s: &Scenario) -> Result<()> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        if self.n_uavs as usize != s.n_uavs {
            return Err(Error::DimensionMismatch { expected: self.n_uavs as usize, got: s.n_uavs });
        }
        for (name, w, v) in [
            ("area_x", self.area_x, s.area_x),
            ("area_y", self.area_y, s.area_y),
            ("h_min_m", self.h_min, s.h_min_m),
            ("h_max_m", self.h_max, s.h_max_m),
        ] {
            if !same(w, v) {
                return Err(Error::Config(format!("weight file was built for {name} = {w}, scenario has {v}")));
            }
        }
        Ok(())
    }
}

/// Rasterizes `users`, runs the network and decodes its outputs; with
/// `with_repair` the result is also made feasible.
pub fn infer_deployment(users: &UserSet, s: &Scenario, net: &Network, with_repair: bool) -> Result<Deployment> {
    let h = net.header();
    h.check_scenario(s)?;
    let grid = rasterize(users, s, h.grid as usize, h.xi)?;
    let out = net.forward(&grid)?;
    let d = decode(&out, h)?.deployment;
    if with_repair {
        repair(&d, s)
    } else {
        Ok(d)
    }
}
