//! Flags shared by several subcommands.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use isac_deploy::channel::ShadowingMode;
use isac_deploy::{Result, Scenario, SwarmConfig, Variant};

/// Scenario constants. Values start from `--config` (or the built-in
/// defaults) and individual flags override them.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// TOML file with scenario keys; flags below override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Area extent along x, meters [default: 5000]
    #[arg(long)]
    pub area_x: Option<f64>,
    /// Area extent along y, meters [default: 5000]
    #[arg(long)]
    pub area_y: Option<f64>,
    /// Number of UAVs M [default: 5]
    #[arg(long)]
    pub n_uavs: Option<usize>,
    /// Number of ground users N [default: 30]
    #[arg(long)]
    pub n_users: Option<usize>,
    /// Carrier frequency, Hz [default: 1.4e9]
    #[arg(long)]
    pub f_hz: Option<f64>,
    /// Path-loss exponent [default: 5]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Shadowing standard deviation, dB [default: 6]
    #[arg(long)]
    pub sigma_shadow_db: Option<f64>,
    /// Foliage depth crossed by the slant path, meters [default: 30]
    #[arg(long)]
    pub foliage_depth_m: Option<f64>,
    /// Noise power, dBm [default: -140]
    #[arg(long)]
    pub psi_dbm: Option<f64>,
    /// Per-UAV transmit power, watts [default: 3]
    #[arg(long)]
    pub p_max_w: Option<f64>,
    /// Per-UAV bandwidth, Hz [default: 1e6]
    #[arg(long)]
    pub b_max_hz: Option<f64>,
    /// Communication SINR threshold, dB [default: 3]
    #[arg(long)]
    pub gamma_c_db: Option<f64>,
    /// Localization SINR threshold, dB [default: 1]
    #[arg(long)]
    pub gamma_p_db: Option<f64>,
    /// Communication users per UAV [default: 10]
    #[arg(long)]
    pub k_c: Option<usize>,
    /// Localization users per UAV [default: 30]
    #[arg(long)]
    pub k_p: Option<usize>,
    /// Minimum altitude, meters [default: 50]
    #[arg(long)]
    pub h_min_m: Option<f64>,
    /// Maximum altitude, meters [default: 500]
    #[arg(long)]
    pub h_max_m: Option<f64>,
    /// Minimum inter-UAV distance, meters [default: 100]
    #[arg(long)]
    pub d_min_m: Option<f64>,
    /// PDOP cap [default: 20]
    #[arg(long)]
    pub rho_max: Option<f64>,
    /// Utility weight of throughput [default: 0.5]
    #[arg(long)]
    pub lambda_w: Option<f64>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<Scenario> {
        let mut s = match &self.config {
            Some(path) => Scenario::load(path)?,
            None => Scenario::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$flag { s.$field = v; })*
            };
        }
        set!(
            area_x => area_x,
            area_y => area_y,
            n_uavs => n_uavs,
            n_users => n_users,
            f_hz => f_hz,
            eta => eta,
            sigma_shadow_db => sigma_shadow_db,
            foliage_depth_m => foliage_depth_m,
            psi_dbm => psi_dbm,
            p_max_w => p_max_w,
            b_max_hz => b_max_hz,
            gamma_c_db => gamma_c_db,
            gamma_p_db => gamma_p_db,
            k_c => k_c,
            k_p => k_p,
            h_min_m => h_min_m,
            h_max_m => h_max_m,
            d_min_m => d_min_m,
            rho_max => rho_max,
            lambda_w => lambda_w,
        );
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SwarmArgs {
    /// Swarm size k
    #[arg(long, default_value_t = 50)]
    pub particles: usize,
    /// Iterations t_max
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// Inertia schedule start
    #[arg(long, default_value_t = 0.9)]
    pub w_ini: f64,
    /// Inertia schedule end
    #[arg(long, default_value_t = 0.4)]
    pub w_end: f64,
    /// Learning-factor upper end
    #[arg(long, default_value_t = 2.5)]
    pub c_ini: f64,
    /// Learning-factor lower end
    #[arg(long, default_value_t = 0.5)]
    pub c_end: f64,
    /// Velocity clamp as a fraction of each axis extent
    #[arg(long, default_value_t = 0.1)]
    pub v_max_frac: f64,
    /// Inertia weight of the static-inertia variants
    #[arg(long, default_value_t = 0.7)]
    pub static_w: f64,
    /// Learning factors of the static-learning variants
    #[arg(long, default_value_t = 2.0)]
    pub static_c: f64,
    /// Use the unnormalized ((t_max - t) / t)^1.2 learning-factor schedule
    #[arg(long)]
    pub literal_learning: bool,
}

impl SwarmArgs {
    pub fn config(&self, variant: Variant) -> Result<SwarmConfig> {
        let cfg = SwarmConfig {
            k_particles: self.particles,
            t_max: self.iterations,
            w_ini: self.w_ini,
            w_end: self.w_end,
            c_ini: self.c_ini,
            c_end: self.c_end,
            v_max_frac: self.v_max_frac,
            variant,
            static_w: self.static_w,
            static_c: self.static_c,
            literal_learning: self.literal_learning,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shadow {
    /// Zero shadowing (expected path loss)
    Expected,
    /// One seeded log-normal draw per UAV-user pair
    Sampled,
}

impl From<Shadow> for ShadowingMode {
    fn from(s: Shadow) -> Self {
        match s {
            Shadow::Expected => ShadowingMode::Expected,
            Shadow::Sampled => ShadowingMode::Sampled,
        }
    }
}

/// Deployment algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Dpso,
    Pso,
    Dwpso,
    Dcpso,
    Kmeans,
    Cnn,
}

impl Algo {
    pub fn variant(self) -> Option<Variant> {
        match self {
            Algo::Dpso => Some(Variant::Dpso),
            Algo::Pso => Some(Variant::Pso),
            Algo::Dwpso => Some(Variant::Dwpso),
            Algo::Dcpso => Some(Variant::Dcpso),
            Algo::Kmeans | Algo::Cnn => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::Kmeans => "kmeans",
            Algo::Cnn => "cnn",
            a => a.variant().expect("swarm variant").name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridFormat {
    Csv,
    Pgm,
}
