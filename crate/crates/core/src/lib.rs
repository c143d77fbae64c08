//! Semi-discrete quenched Edwards-Wilkinson model.
//!
//! * [`disorder`]: seed-keyed obstacle field and its exponential moments.
//! * [`lattice`]: cubes, tori, the discrete Laplacian and counting functions.
//! * [`dynamics`]: explicit Euler integration and velocity records.
//! * [`bound`]: the ballistic-velocity lower bound and its discrete variant.
//! * [`oracle`]: exhaustive checks on admissible integer profiles.

// `!(x > y)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod disorder;
pub mod dynamics;
pub mod lattice;
pub mod oracle;
pub mod rng;
pub mod stats;

pub use bound::{velocity_bound, BoundParams, BoundValue, Branch};
pub use disorder::{ObstacleDistribution, QuenchedField};
pub use dynamics::{integrate, SimConfig, SimState, Trajectory, VelocityRecord};
pub use lattice::{Cube, Domain, HeightField, Torus};
pub use stats::MeanEstimate;
