//! Range sensor: ray fan, depth corruption and the log-odds map update.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::grid::{Cell, OccupancyGrid, Pose};
use super::raycast::{cast_ray, traverse};
use crate::error::{Error, Result};

pub const DEFAULT_L_HIT: f64 = 0.85;
pub const DEFAULT_L_MISS: f64 = -0.4;
pub const DEFAULT_RAY_COUNT: usize = 64;

/// Probability that impulse noise replaces a return.
pub const IMPULSE_RATE: f64 = 0.5;

/// Unmodelled depth corruption applied to returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    /// Zero-mean Gaussian with σ = depth / 8.
    Gaussian,
    /// With probability 1/2 the depth is redrawn uniformly in `[d/3, 5d/3]`.
    Impulse,
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::None => "none",
            NoiseModel::Gaussian => "gaussian",
            NoiseModel::Impulse => "impulse",
        })
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(NoiseModel::None),
            "gaussian" => Ok(NoiseModel::Gaussian),
            "impulse" => Ok(NoiseModel::Impulse),
            other => Err(Error::domain(format!("unknown noise model {other:?}"))),
        }
    }
}

impl NoiseModel {
    /// Corrupts one true depth.
    pub fn corrupt<R: Rng + ?Sized>(&self, depth: f64, rng: &mut R) -> f64 {
        match self {
            NoiseModel::None => depth,
            NoiseModel::Gaussian => {
                let sigma = depth / 8.0;
                if sigma > 0.0 {
                    depth + Normal::new(0.0, sigma).expect("positive sigma").sample(rng)
                } else {
                    depth
                }
            }
            NoiseModel::Impulse => {
                if rng.random_bool(IMPULSE_RATE) && depth > 0.0 {
                    rng.random_range(depth / 3.0..5.0 * depth / 3.0)
                } else {
                    depth
                }
            }
        }
    }
}

/// Sensor geometry and inverse sensor model. The field of view is a full
/// circle; ray `k` points at `heading + 2πk / ray_count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub ray_count: usize,
    pub max_range: f64,
    pub l_hit: f64,
    pub l_miss: f64,
    pub noise: NoiseModel,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            ray_count: DEFAULT_RAY_COUNT,
            max_range: 6.0,
            l_hit: DEFAULT_L_HIT,
            l_miss: DEFAULT_L_MISS,
            noise: NoiseModel::None,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ray_count == 0 {
            return Err(Error::domain("ray count must be at least 1"));
        }
        if !(self.max_range >= 0.0) {
            return Err(Error::domain("max range must be non-negative"));
        }
        if !(self.l_hit > 0.0 && self.l_miss < 0.0) {
            return Err(Error::domain("log-odds increments need l_hit > 0 > l_miss"));
        }
        Ok(())
    }

    pub fn ray_angles(&self, heading: f64) -> Vec<f64> {
        (0..self.ray_count)
            .map(|k| heading + std::f64::consts::TAU * k as f64 / self.ray_count as f64)
            .collect()
    }

    pub fn noiseless(&self) -> Self {
        Self {
            noise: NoiseModel::None,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pose: Pose,
    pub ray_angles: Vec<f64>,
    /// One depth per ray; `max_range` marks a miss.
    pub depths: Vec<f64>,
    pub max_range: f64,
    pub noise: NoiseModel,
}

impl Observation {
    pub fn empty(pose: Pose, max_range: f64) -> Self {
        Self {
            pose,
            ray_angles: Vec::new(),
            depths: Vec::new(),
            max_range,
            noise: NoiseModel::None,
        }
    }

    pub fn is_miss(&self, ray: usize) -> bool {
        self.depths[ray] >= self.max_range
    }
}

/// Simulates one scan of `truth`. Only returns are corrupted; a miss stays
/// a miss, and corrupted depths are clipped into `[0, max_range]`.
pub fn sensor_observe<R: Rng + ?Sized>(
    truth: &OccupancyGrid,
    pose: &Pose,
    sensor: &SensorConfig,
    rng: &mut R,
) -> Result<Observation> {
    sensor.validate()?;
    let ray_angles = sensor.ray_angles(pose.heading);
    let mut depths = Vec::with_capacity(ray_angles.len());
    for &angle in &ray_angles {
        let ray = cast_ray(truth, pose, angle, sensor.max_range)?;
        let depth = match ray.hit {
            Some(d) => sensor.noise.corrupt(d, rng).clamp(0.0, sensor.max_range),
            None => sensor.max_range,
        };
        depths.push(depth);
    }
    Ok(Observation {
        pose: *pose,
        ray_angles,
        depths,
        max_range: sensor.max_range,
        noise: sensor.noise,
    })
}

/// Applies an observation to `belief`: cells in front of the measured depth
/// receive `l_miss`, the cell at the depth receives `l_hit`. The sensor's own
/// cell is skipped. Returns the distinct touched cells in sorted order.
pub fn logodds_update(belief: &mut OccupancyGrid, obs: &Observation, l_hit: f64, l_miss: f64) -> Result<Vec<Cell>> {
    if !(l_hit > 0.0 && l_miss < 0.0) {
        return Err(Error::domain("log-odds increments need l_hit > 0 > l_miss"));
    }
    if obs.ray_angles.len() != obs.depths.len() {
        return Err(Error::domain("observation has mismatched ray and depth lists"));
    }
    let mut touched = BTreeSet::new();
    for (ray, (&angle, &depth)) in obs.ray_angles.iter().zip(&obs.depths).enumerate() {
        if obs.is_miss(ray) {
            for c in traverse(belief, obs.pose.x, obs.pose.y, angle, obs.max_range)
                .iter()
                .skip(1)
            {
                belief.add_logodds(c.cell, l_miss);
                touched.insert(c.cell);
            }
        } else {
            // The return lies in the last cell whose entry is not beyond it.
            let crossings = traverse(belief, obs.pose.x, obs.pose.y, angle, depth + 1e-9);
            let n = crossings.len();
            for (i, c) in crossings.iter().enumerate().skip(1) {
                let delta = if i + 1 == n { l_hit } else { l_miss };
                belief.add_logodds(c.cell, delta);
                touched.insert(c.cell);
            }
        }
    }
    Ok(touched.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::grid::{logistic, LOGODDS_LIMIT};
    use crate::stats::{mean, std_dev};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corridor() -> (OccupancyGrid, Pose) {
        let mut truth = OccupancyGrid::filled(12, 3, 1.0, -LOGODDS_LIMIT).unwrap();
        for y in 0..3 {
            truth.set_logodds(Cell::new(8, y), LOGODDS_LIMIT);
        }
        (truth, Pose::new(1.5, 1.5, 0.0))
    }

    #[test]
    fn noiseless_depths_match_cast() {
        let (truth, pose) = corridor();
        let sensor = SensorConfig {
            ray_count: 8,
            max_range: 10.0,
            ..SensorConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = sensor_observe(&truth, &pose, &sensor, &mut rng).unwrap();
        for (angle, depth) in obs.ray_angles.iter().zip(&obs.depths) {
            let ray = cast_ray(&truth, &pose, *angle, 10.0).unwrap();
            assert_eq!(*depth, ray.depth());
        }
        assert_eq!(obs.depths[0], 6.5);
    }

    #[test]
    fn gaussian_noise_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| NoiseModel::Gaussian.corrupt(4.0, &mut rng))
            .collect();
        let sd = std_dev(&draws);
        assert!((sd - 0.5).abs() < 0.05 * 0.5, "sd {sd}");
        assert!((mean(&draws) - 4.0).abs() < 0.05);
    }

    #[test]
    fn impulse_noise_rate_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut altered = 0;
        for _ in 0..10_000 {
            let d = NoiseModel::Impulse.corrupt(3.0, &mut rng);
            assert!((1.0..=5.0).contains(&d));
            if d != 3.0 {
                altered += 1;
            }
        }
        let rate = altered as f64 / 10_000.0;
        assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn seeded_scans_repeat() {
        let (truth, pose) = corridor();
        let sensor = SensorConfig {
            noise: NoiseModel::Impulse,
            ..SensorConfig::default()
        };
        let a = sensor_observe(&truth, &pose, &sensor, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sensor_observe(&truth, &pose, &sensor, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_hit_and_miss_arithmetic() {
        let mut belief = OccupancyGrid::unknown(4, 1, 1.0).unwrap();
        let obs = Observation {
            pose: Pose::new(0.5, 0.5, 0.0),
            ray_angles: vec![0.0],
            depths: vec![1.5],
            max_range: 3.0,
            noise: NoiseModel::None,
        };
        let touched = logodds_update(&mut belief, &obs, 0.85, -0.4).unwrap();
        // ray enters cell 1 at 0.5 and cell 2 at 1.5: cell 1 free, cell 2 hit
        assert_eq!(touched, vec![Cell::new(1, 0), Cell::new(2, 0)]);
        assert!((belief.logodds(Cell::new(2, 0)) - 0.85).abs() < 1e-12);
        assert!((belief.probability(Cell::new(2, 0)) - 0.700_567).abs() < 1e-6);
        assert!((belief.logodds(Cell::new(1, 0)) + 0.4).abs() < 1e-12);
        assert!((logistic(-0.4) - 0.401_312).abs() < 1e-6);
        assert_eq!(belief.logodds(Cell::new(3, 0)), 0.0);
        assert_eq!(belief.logodds(Cell::new(0, 0)), 0.0);
    }

    #[test]
    fn empty_observation_is_noop() {
        let mut belief = OccupancyGrid::unknown(3, 3, 1.0).unwrap();
        let before = belief.clone();
        let touched = logodds_update(
            &mut belief,
            &Observation::empty(Pose::new(1.5, 1.5, 0.0), 3.0),
            0.85,
            -0.4,
        )
        .unwrap();
        assert!(touched.is_empty());
        assert_eq!(belief, before);
    }

    #[test]
    fn updates_stay_clamped() {
        let mut belief = OccupancyGrid::unknown(4, 1, 1.0).unwrap();
        let obs = Observation {
            pose: Pose::new(0.5, 0.5, 0.0),
            ray_angles: vec![0.0; 100],
            depths: vec![1.5; 100],
            max_range: 3.0,
            noise: NoiseModel::None,
        };
        logodds_update(&mut belief, &obs, 0.85, -0.4).unwrap();
        assert_eq!(belief.logodds(Cell::new(2, 0)), LOGODDS_LIMIT);
        assert_eq!(belief.logodds(Cell::new(1, 0)), -LOGODDS_LIMIT);
    }
}
