//! Scenario parameters: area geometry, radio constants and protocol limits.
//!
//! A scenario is read from and written to a flat TOML file. Every key is
//! optional; missing keys take the defaults listed on [`Scenario::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All physical and protocol constants of one deployment problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Area extent along x, meters.
    pub area_x: f64,
    /// Area extent along y, meters.
    pub area_y: f64,
    /// Number of UAVs.
    pub n_uavs: usize,
    /// Number of ground users.
    pub n_users: usize,

    /// Carrier frequency, Hz.
    pub f_hz: f64,
    /// Reference distance, meters.
    pub d0_m: f64,
    /// Signal propagation speed, m/s.
    pub c_mps: f64,
    /// Path-loss exponent.
    pub eta: f64,
    /// Log-normal shadowing standard deviation, dB.
    pub sigma_shadow_db: f64,

    pub slant_a: f64,
    pub slant_c: f64,
    pub slant_e: f64,
    pub slant_g: f64,
    pub slant_h: f64,
    /// Vegetation depth crossed by the slant path, meters.
    pub foliage_depth_m: f64,

    /// Receiver noise power, dBm.
    pub psi_dbm: f64,
    /// Per-UAV transmit power budget, watts.
    pub p_max_w: f64,
    /// Per-UAV bandwidth budget, Hz.
    pub b_max_hz: f64,
    /// Communication SINR threshold, dB.
    pub gamma_c_db: f64,
    /// Localization SINR threshold, dB.
    pub gamma_p_db: f64,
    /// Users one UAV can serve in the communication phase.
    pub k_c: usize,
    /// Users one UAV can serve in the localization phase.
    pub k_p: usize,

    pub h_min_m: f64,
    pub h_max_m: f64,
    /// Minimum inter-UAV separation, meters.
    pub d_min_m: f64,

    /// PDOP cap.
    pub rho_max: f64,
    /// Communication weight in the utility, in [0, 1].
    pub lambda_w: f64,
    /// Throughput normalization ceiling, bits/s. `None` derives it from
    /// `b_max_hz` and a 30 dB SINR cap.
    pub r_norm_max: Option<f64>,
    /// PDOP normalization floor.
    pub g_norm_min: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            area_x: 5000.0,
            area_y: 5000.0,
            n_uavs: 5,
            n_users: 30,
            f_hz: 1.4e9,
            d0_m: 1.0,
            c_mps: 3e8,
            eta: 5.0,
            sigma_shadow_db: 6.0,
            slant_a: 0.25,
            slant_c: 0.39,
            slant_e: 0.25,
            slant_g: 0.0,
            slant_h: 0.05,
            foliage_depth_m: 30.0,
            psi_dbm: -140.0,
            p_max_w: 3.0,
            b_max_hz: 1e6,
            gamma_c_db: 3.0,
            gamma_p_db: 1.0,
            k_c: 10,
            k_p: 30,
            h_min_m: 50.0,
            h_max_m: 500.0,
            d_min_m: 100.0,
            rho_max: 20.0,
            lambda_w: 0.5,
            r_norm_max: None,
            g_norm_min: 1.0,
        }
    }
}

/// SINR cap used for the default throughput normalization ceiling, dB.
pub const SINR_NORM_CAP_DB: f64 = 30.0;

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        let positive = [
            ("area_x", self.area_x),
            ("area_y", self.area_y),
            ("f_hz", self.f_hz),
            ("d0_m", self.d0_m),
            ("c_mps", self.c_mps),
            ("p_max_w", self.p_max_w),
            ("b_max_hz", self.b_max_hz),
            ("d_min_m", self.d_min_m),
            ("h_min_m", self.h_min_m),
            ("foliage_depth_m", self.foliage_depth_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.n_uavs < 3 {
            return bad(format!("at least 3 UAVs are needed for TDOA, got {}", self.n_uavs));
        }
        if !(0.0..=1.0).contains(&self.lambda_w) {
            return bad(format!("lambda_w must lie in [0, 1], got {}", self.lambda_w));
        }
        if !(self.h_min_m < self.h_max_m) {
            return bad(format!("h_min_m ({}) must be below h_max_m ({})", self.h_min_m, self.h_max_m));
        }
        if !(self.g_norm_min > 0.0 && self.rho_max > self.g_norm_min) {
            return bad(format!(
                "need rho_max > g_norm_min > 0, got rho_max={} g_norm_min={}",
                self.rho_max, self.g_norm_min
            ));
        }
        if let Some(r) = self.r_norm_max {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("r_norm_max must be positive, got {r}"));
            }
        }
        if self.sigma_shadow_db < 0.0 {
            return bad("sigma_shadow_db must be non-negative".into());
        }
        Ok(())
    }

    /// Throughput normalization ceiling in bits/s.
    pub fn r_norm_ceiling(&self) -> f64 {
        self.r_norm_max
            .unwrap_or_else(|| self.b_max_hz * (1.0 + db_to_linear(SINR_NORM_CAP_DB)).log2())
    }

    /// Noise power in watts.
    pub fn noise_w(&self) -> f64 {
        dbm_to_watts(self.psi_dbm)
    }

    pub fn gamma_c(&self) -> f64 {
        db_to_linear(self.gamma_c_db)
    }

    pub fn gamma_p(&self) -> f64 {
        db_to_linear(self.gamma_p_db)
    }

    /// Lower and upper corners of the swarm search box.
    pub fn search_box(&self) -> ([f64; 3], [f64; 3]) {
        ([0.0, 0.0, self.h_min_m], [self.area_x, self.area_y, self.h_max_m])
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario is always representable as TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Scenario::default().validate().unwrap();
    }

    #[test]
    fn noise_is_1e_minus_17_watts() {
        let s = Scenario::default();
        assert!((s.noise_w() - 1e-17).abs() < 1e-30);
    }

    #[test]
    fn default_throughput_ceiling() {
        let s = Scenario::default();
        assert!((s.r_norm_ceiling() - 1e6 * 1001f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn rejects_too_few_uavs() {
        let s = Scenario { n_uavs: 2, ..Default::default() };
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn rejects_bad_weight_and_altitudes() {
        let s = Scenario { lambda_w: 1.5, ..Default::default() };
        assert!(s.validate().is_err());
        let s = Scenario { h_min_m: 600.0, ..Default::default() };
        assert!(s.validate().is_err());
        let s = Scenario { rho_max: 0.5, ..Default::default() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_partial_file_uses_defaults() {
        let s = Scenario::from_toml_str("n_users = 12\nlambda_w = 0.25\n").unwrap();
        assert_eq!(s.n_users, 12);
        assert_eq!(s.lambda_w, 0.25);
        assert_eq!(s.k_p, 30);
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario { r_norm_max: Some(5e6), ..Default::default() };
        let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_toml_str("bogus = 1").is_err());
    }
}
