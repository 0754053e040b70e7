//! Independent brute-force checks of the reduced model: the full Lindblad
//! generator, exact per-collision tape changes and a stochastic collision
//! simulation.

pub mod collision;
pub mod exact;
pub mod liouvillian;

pub use collision::{simulate_collisions, three_body_unitary, TrajectoryResult};
pub use exact::{exact_map_energy_delta, exact_map_entropy_delta, exact_map_ergotropy_delta};
pub use liouvillian::{build_liouvillian, integrate_to_steady, trace_distance, IntegrateOptions, Liouvillian};
