//! Particle swarm deployment search and its KMeans initializer.
//!
//! Four swarm variants share one loop and differ only in their coefficient
//! schedules:
//!
//! | variant | inertia weight      | learning factors        |
//! |---------|---------------------|-------------------------|
//! | DPSO    | nonlinear decreasing | opposing nonlinear     |
//! | DWPSO   | nonlinear decreasing | constant               |
//! | DCPSO   | constant             | opposing nonlinear     |
//! | PSO     | constant             | constant               |

mod kmeans;
mod pso;
mod schedule;

pub use kmeans::{kmeans, kmeans_init, KMEANS_ALTITUDE_OFFSET_M};
pub use pso::{optimize, optimize_with, step, Particle, SwarmConfig, SwarmResult, Variant};
pub use schedule::{inertia_weight, learning_factors, InertiaSchedule, LearningSchedule};
