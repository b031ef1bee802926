//! Lattice traversal (Amanatides–Woo) and ray casting against a truth grid.

use super::grid::{Cell, OccupancyGrid, Pose};
use crate::error::{Error, Result};

/// One lattice cell crossed by a ray, with the distance at which the ray
/// enters it (0 for the origin cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub cell: Cell,
    pub entry: f64,
}

/// Cells crossed by the segment of length `range` from `(x, y)` along
/// `angle`, in visitation order, stopping at the grid boundary. Consecutive
/// cells are 4-connected. Exact corner crossings step along x first.
pub fn traverse(grid: &OccupancyGrid, x: f64, y: f64, angle: f64, range: f64) -> Vec<Crossing> {
    let mut out = Vec::new();
    let Some(mut cell) = grid.cell_at(x, y) else {
        return out;
    };
    if !(range > 0.0) {
        return out;
    }
    let res = grid.resolution();
    let (dx, dy) = (angle.cos(), angle.sin());
    let axis = |d: f64, pos: f64, idx: usize| -> (i64, f64, f64) {
        if d > 1e-12 {
            let boundary = (idx as f64 + 1.0) * res;
            (1, (boundary - pos) / d, res / d)
        } else if d < -1e-12 {
            let boundary = idx as f64 * res;
            (-1, (boundary - pos) / d, -res / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (step_x, mut t_max_x, t_delta_x) = axis(dx, x, cell.x);
    let (step_y, mut t_max_y, t_delta_y) = axis(dy, y, cell.y);
    let mut entry = 0.0;
    loop {
        out.push(Crossing { cell, entry });
        let advance_x = t_max_x <= t_max_y;
        let next_t = if advance_x { t_max_x } else { t_max_y };
        if !(next_t < range) {
            break;
        }
        let (nx, ny) = if advance_x {
            t_max_x += t_delta_x;
            (cell.x as i64 + step_x, cell.y as i64)
        } else {
            t_max_y += t_delta_y;
            (cell.x as i64, cell.y as i64 + step_y)
        };
        if nx < 0 || ny < 0 || nx as usize >= grid.width() || ny as usize >= grid.height() {
            break;
        }
        cell = Cell::new(nx as usize, ny as usize);
        entry = next_t;
    }
    out
}

/// Result of casting one ray into the truth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RayCast {
    /// Crossed cells up to and including the hit cell.
    pub crossings: Vec<Crossing>,
    /// Distance to the first occupied cell, `None` on a miss.
    pub hit: Option<f64>,
    pub max_range: f64,
}

impl RayCast {
    pub fn cells(&self) -> Vec<Cell> {
        self.crossings.iter().map(|c| c.cell).collect()
    }

    /// Hit distance, or `max_range` on a miss.
    pub fn depth(&self) -> f64 {
        self.hit.unwrap_or(self.max_range)
    }
}

/// Casts a ray from `pose` into `truth`. The origin cell never counts as a hit.
pub fn cast_ray(truth: &OccupancyGrid, pose: &Pose, angle: f64, max_range: f64) -> Result<RayCast> {
    if !truth.contains_point(pose.x, pose.y) {
        return Err(Error::domain(format!("pose ({}, {}) outside the grid", pose.x, pose.y)));
    }
    if !(max_range >= 0.0) {
        return Err(Error::domain(format!(
            "max range must be non-negative, got {max_range}"
        )));
    }
    let mut crossings = Vec::new();
    let mut hit = None;
    for (i, c) in traverse(truth, pose.x, pose.y, angle, max_range)
        .into_iter()
        .enumerate()
    {
        crossings.push(c);
        if i > 0 && truth.is_occupied(c.cell) {
            hit = Some(c.entry);
            break;
        }
    }
    Ok(RayCast {
        crossings,
        hit,
        max_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::grid::LOGODDS_LIMIT;

    fn empty(w: usize, h: usize, res: f64) -> OccupancyGrid {
        OccupancyGrid::filled(w, h, res, -LOGODDS_LIMIT).unwrap()
    }

    fn four_connected(cs: &[Crossing]) -> bool {
        cs.windows(2).all(|w| {
            let (a, b) = (w[0].cell, w[1].cell);
            a.x.abs_diff(b.x) + a.y.abs_diff(b.y) == 1
        })
    }

    #[test]
    fn empty_world_misses() {
        let g = empty(20, 20, 1.0);
        let pose = Pose::new(10.5, 10.5, 0.0);
        for k in 0..16 {
            let angle = k as f64 * std::f64::consts::TAU / 16.0 + 0.1;
            let ray = cast_ray(&g, &pose, angle, 6.0).unwrap();
            assert!(ray.hit.is_none());
            assert_eq!(ray.depth(), 6.0);
            assert!(four_connected(&ray.crossings));
            // the segment end lies in the final cell
            let end = (10.5 + 6.0 * angle.cos(), 10.5 + 6.0 * angle.sin());
            assert_eq!(ray.crossings.last().unwrap().cell, g.cell_at(end.0, end.1).unwrap());
        }
    }

    #[test]
    fn axis_aligned_ray_covers_every_cell() {
        let g = empty(10, 3, 1.0);
        let ray = cast_ray(&g, &Pose::new(0.5, 1.5, 0.0), 0.0, 20.0).unwrap();
        let xs: Vec<usize> = ray.crossings.iter().map(|c| c.cell.x).collect();
        assert_eq!(xs, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn wall_three_metres_ahead() {
        let mut g = empty(60, 10, 0.1);
        // robot at 0.55 m, wall column x = 35 starting at 3.5 m
        for y in 0..10 {
            g.set_logodds(Cell::new(35, y), LOGODDS_LIMIT);
        }
        let pose = Pose::new(0.55, 0.55, 0.0);
        let ray = cast_ray(&g, &pose, 0.0, 5.0).unwrap();
        let depth = ray.hit.unwrap();
        assert!((depth - 3.0).abs() <= 0.1 + 1e-9, "depth {depth}");
        assert_eq!(ray.crossings.last().unwrap().cell, Cell::new(35, 5));
    }

    #[test]
    fn zero_range_is_empty_miss() {
        let g = empty(5, 5, 1.0);
        let ray = cast_ray(&g, &Pose::new(2.5, 2.5, 0.0), 1.0, 0.0).unwrap();
        assert!(ray.crossings.is_empty());
        assert!(ray.hit.is_none());
    }

    #[test]
    fn pose_outside_is_error() {
        let g = empty(5, 5, 1.0);
        assert!(cast_ray(&g, &Pose::new(5.5, 2.5, 0.0), 0.0, 3.0).is_err());
    }
}
