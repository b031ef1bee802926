//! Expected and specific information gain for factorized Bernoulli maps.
//!
//! The expected gain of a ray is evaluated cell by cell: cell `k` is observed
//! only if every earlier cell is free, in which case it is marked occupied
//! with probability `p_k` and free otherwise. Summing the per-cell expected
//! entropy drops over rays treats rays as independent, which double counts
//! cells shared by several rays. That approximation is deliberate; it is one
//! of the discrepancies the improvement function learns.

use std::collections::BTreeSet;

use super::grid::{clamp_logodds, logodds_entropy, Cell, OccupancyGrid, Pose};
use super::raycast::traverse;
use super::sensor::{logodds_update, Observation, SensorConfig};
use crate::error::{Error, Result};

/// Expected gain of one viewpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewGain {
    /// Sum over rays of expected entropy reduction, in bits.
    pub bits: f64,
    /// Distinct cells the viewpoint can sense; the normalising constant.
    pub footprint: usize,
}

impl ViewGain {
    /// Gain per sensed cell, clamped into `[0, cap]`.
    pub fn normalized(&self, cap: f64) -> f64 {
        normalize(self.bits, self.footprint, cap)
    }
}

pub(crate) fn normalize(bits: f64, footprint: usize, cap: f64) -> f64 {
    if footprint == 0 {
        return 0.0;
    }
    (bits / footprint as f64).clamp(0.0, cap)
}

/// Distinct cells within range of the ray fan at `pose`, origin excluded.
pub fn footprint(grid: &OccupancyGrid, pose: &Pose, sensor: &SensorConfig) -> BTreeSet<Cell> {
    let mut cells = BTreeSet::new();
    for angle in sensor.ray_angles(pose.heading) {
        for c in traverse(grid, pose.x, pose.y, angle, sensor.max_range).iter().skip(1) {
            cells.insert(c.cell);
        }
    }
    cells
}

/// Expected entropy reduction along one ray under the belief.
pub fn expected_ray_gain(belief: &OccupancyGrid, pose: &Pose, angle: f64, sensor: &SensorConfig) -> f64 {
    let mut reach = 1.0;
    let mut gain = 0.0;
    for c in traverse(belief, pose.x, pose.y, angle, sensor.max_range).iter().skip(1) {
        let l = belief.logodds(c.cell);
        let p = belief.probability(c.cell);
        let prior = logodds_entropy(l);
        let posterior = p * logodds_entropy(clamp_logodds(l + sensor.l_hit))
            + (1.0 - p) * logodds_entropy(clamp_logodds(l + sensor.l_miss));
        gain += reach * (prior - posterior);
        reach *= 1.0 - p;
        if reach < 1e-15 {
            break;
        }
    }
    gain
}

/// Expected information gain of a viewpoint, summed over its rays.
pub fn expected_info_gain(belief: &OccupancyGrid, viewpoint: &Pose, sensor: &SensorConfig) -> Result<ViewGain> {
    sensor.validate()?;
    if !belief.contains_point(viewpoint.x, viewpoint.y) {
        return Err(Error::domain("viewpoint outside the grid"));
    }
    let bits = sensor
        .ray_angles(viewpoint.heading)
        .into_iter()
        .map(|a| expected_ray_gain(belief, viewpoint, a, sensor))
        .sum();
    Ok(ViewGain {
        bits,
        footprint: footprint(belief, viewpoint, sensor).len(),
    })
}

/// Realized entropy reduction over `touched` cells; negative when
/// observations made the map less certain.
pub fn specific_info_gain(before: &OccupancyGrid, after: &OccupancyGrid, touched: &[Cell]) -> Result<f64> {
    if !before.same_shape(after) {
        return Err(Error::domain("belief grids differ in shape"));
    }
    let mut total = 0.0;
    for &c in touched {
        if !before.contains(c) {
            return Err(Error::domain(format!("touched cell {c:?} outside the grid")));
        }
        total += before.entropy(c) - after.entropy(c);
    }
    let cap = touched.len() as f64;
    Ok(total.clamp(-cap, cap))
}

/// Observation the belief considers most likely: each ray stops at the first
/// cell believed occupied (p > 0.5), otherwise it misses.
pub fn most_likely_observation(belief: &OccupancyGrid, pose: &Pose, sensor: &SensorConfig) -> Observation {
    let ray_angles = sensor.ray_angles(pose.heading);
    let depths = ray_angles
        .iter()
        .map(|&a| {
            traverse(belief, pose.x, pose.y, a, sensor.max_range)
                .iter()
                .skip(1)
                .find(|c| belief.is_occupied(c.cell))
                .map_or(sensor.max_range, |c| c.entry)
        })
        .collect();
    Observation {
        pose: *pose,
        ray_angles,
        depths,
        max_range: sensor.max_range,
        noise: sensor.noise,
    }
}

/// Rolls the belief forward with the most likely observation at `pose`.
pub fn roll_forward(belief: &mut OccupancyGrid, pose: &Pose, sensor: &SensorConfig) -> Result<()> {
    let obs = most_likely_observation(belief, pose, sensor);
    logodds_update(belief, &obs, sensor.l_hit, sensor.l_miss)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::grid::{voxel_entropy, LOGODDS_LIMIT};

    fn perfect(ray_count: usize, range: f64) -> SensorConfig {
        SensorConfig {
            ray_count,
            max_range: range,
            l_hit: 2.0 * LOGODDS_LIMIT,
            l_miss: -2.0 * LOGODDS_LIMIT,
            ..SensorConfig::default()
        }
    }

    #[test]
    fn known_map_has_no_expected_gain() {
        let mut belief = OccupancyGrid::filled(9, 9, 1.0, -LOGODDS_LIMIT).unwrap();
        belief.set_logodds(Cell::new(6, 4), LOGODDS_LIMIT);
        let g = expected_info_gain(&belief, &Pose::new(4.5, 4.5, 0.0), &SensorConfig::default()).unwrap();
        assert!(g.normalized(1.0) < 1e-6, "{g:?}");
    }

    #[test]
    fn single_unknown_cell_with_perfect_sensor() {
        let mut belief = OccupancyGrid::filled(2, 1, 1.0, -LOGODDS_LIMIT).unwrap();
        belief.set_logodds(Cell::new(1, 0), 0.0);
        let g = expected_info_gain(&belief, &Pose::new(0.5, 0.5, 0.0), &perfect(1, 3.0)).unwrap();
        assert_eq!(g.footprint, 1);
        assert!((g.normalized(1.0) - 1.0).abs() < 1e-3, "{g:?}");
    }

    #[test]
    fn facing_outside_senses_nothing() {
        let belief = OccupancyGrid::unknown(3, 3, 1.0).unwrap();
        let g = expected_info_gain(&belief, &Pose::new(2.5, 1.5, 0.0), &perfect(1, 3.0)).unwrap();
        assert_eq!(g.footprint, 0);
        assert_eq!(g.normalized(1.0), 0.0);
    }

    #[test]
    fn unchanged_belief_has_zero_specific_gain() {
        let b = OccupancyGrid::unknown(3, 3, 1.0).unwrap();
        assert_eq!(specific_info_gain(&b, &b, &[Cell::new(1, 1)]).unwrap(), 0.0);
    }

    #[test]
    fn resolved_cell_gives_one_bit() {
        let before = OccupancyGrid::unknown(2, 2, 1.0).unwrap();
        let mut after = before.clone();
        after.set_logodds(Cell::new(0, 1), -LOGODDS_LIMIT);
        let gain = specific_info_gain(&before, &after, &[Cell::new(0, 1)]).unwrap();
        let expected = 1.0 - voxel_entropy(1.0 / (1.0 + LOGODDS_LIMIT.exp())).unwrap();
        assert!((gain - expected).abs() < 1e-12);
        assert!((gain - 1.0).abs() < 1e-3);
    }

    #[test]
    fn contradicting_evidence_lowers_certainty() {
        // one confident free reading, then an impulse-like false return
        let mut before = OccupancyGrid::unknown(3, 1, 1.0).unwrap();
        before.set_logodds(Cell::new(1, 0), -1.2);
        let mut after = before.clone();
        let obs = Observation {
            pose: Pose::new(0.5, 0.5, 0.0),
            ray_angles: vec![0.0],
            depths: vec![0.9],
            max_range: 3.0,
            noise: crate::gridworld::sensor::NoiseModel::Impulse,
        };
        let touched = logodds_update(&mut after, &obs, 0.85, -0.4).unwrap();
        let gain = specific_info_gain(&before, &after, &touched).unwrap();
        assert!(gain < 0.0, "gain {gain}");
    }

    #[test]
    fn shape_mismatch_is_error() {
        let a = OccupancyGrid::unknown(3, 3, 1.0).unwrap();
        let b = OccupancyGrid::unknown(3, 4, 1.0).unwrap();
        assert!(specific_info_gain(&a, &b, &[]).is_err());
    }
}
