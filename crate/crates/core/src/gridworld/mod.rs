//! Synthetic 2D occupancy-grid environment: ground truth, noisy depth
//! sensing, log-odds belief updates and information-gain computation.
//!
//! All information quantities are in bits. Viewpoint gains are divided by
//! the number of distinct cells the sensor can reach from the viewpoint, so
//! they lie in `[0, 1]` and the gain cap is `β = 1`.

pub mod gain;
pub mod grid;
pub mod raycast;
pub mod sensor;
pub mod world;

pub use gain::{expected_info_gain, footprint, most_likely_observation, roll_forward, specific_info_gain, ViewGain};
pub use grid::{logistic, logit, voxel_entropy, Cell, OccupancyGrid, Pose, LOGODDS_LIMIT};
pub use raycast::{cast_ray, traverse, Crossing, RayCast};
pub use sensor::{
    logodds_update, sensor_observe, NoiseModel, Observation, SensorConfig, DEFAULT_L_HIT, DEFAULT_L_MISS,
};
pub use world::{random_world, Scenario, World};
