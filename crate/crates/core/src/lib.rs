//! Rapid deployment of UAV base stations for integrated sensing and
//! communication (ISAC) over forested terrain.
//!
//! The crate covers the whole offline/online pipeline:
//!
//! * [`channel`]: air-to-ground path loss with foliage slant loss, gains, SINR.
//! * [`metrics`]: throughput, TDOA PDOP, the normalized ISAC utility and the
//!   penalized fitness used by the swarm.
//! * [`association`]: benefit-based greedy association (BGAS) of users to UAVs
//!   for the communication and localization phases.
//! * [`optimizer`]: dynamic PSO and its baselines (PSO, DWPSO, DCPSO) plus the
//!   KMeans initializer.
//! * [`dataset`]: episode generation, Gaussian rasterization and the JSON-Lines
//!   dataset format.
//! * [`inference`]: the binary weight format and a CPU forward pass of the
//!   deployment CNN, with output decoding and feasibility repair.

pub mod association;
pub mod channel;
pub mod dataset;
mod error;
pub mod geometry;
pub mod inference;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod scenario;

pub use association::{bgas, Association};
pub use channel::Shadowing;
pub use error::{Error, Result};
pub use geometry::{distance, Deployment, Point3, UserSet, Violation};
pub use metrics::{EvaluationReport, Evaluator, UserMetrics};
pub use optimizer::{optimize, SwarmConfig, SwarmResult, Variant};
pub use rng::Rng;
pub use scenario::Scenario;
