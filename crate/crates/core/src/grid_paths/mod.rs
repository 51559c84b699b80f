//! Grids, paths, seeded randomness, Brownian samplers, and the closed-form
//! Brownian facts the rest of the crate is tested against.

pub mod brownian;
pub mod grid;
pub mod rng;

pub use brownian::{
    bridge_from_bm, bridge_stay_positive_prob, excursion_density, first_exit_time, last_exit_time,
    sample_bm, sample_bridge, Direction,
};
pub use grid::{trapezoid, Grid, Path};
pub use rng::RngStream;
