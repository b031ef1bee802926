use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Log-odds saturation. Probabilities stay within `σ(±10)`.
pub const LOGODDS_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Planar pose; heading only orients the ray fan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    /// Pose at the centre of `cell`.
    pub fn at_cell(cell: Cell, resolution: f64, heading: f64) -> Self {
        Self {
            x: (cell.x as f64 + 0.5) * resolution,
            y: (cell.y as f64 + 0.5) * resolution,
            heading,
        }
    }
}

pub fn logistic(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn clamp_logodds(l: f64) -> f64 {
    l.clamp(-LOGODDS_LIMIT, LOGODDS_LIMIT)
}

/// Bernoulli entropy in bits with `0·log 0 = 0`.
pub fn voxel_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Entropy of the cell whose log-odds is `l`.
pub(crate) fn logodds_entropy(l: f64) -> f64 {
    entropy_unchecked(logistic(l))
}

/// 2D occupancy lattice stored as clamped log-odds, `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    logodds: Vec<f64>,
}

impl OccupancyGrid {
    /// Every cell at log-odds 0 (p = 0.5).
    pub fn unknown(width: usize, height: usize, resolution: f64) -> Result<Self> {
        Self::filled(width, height, resolution, 0.0)
    }

    pub fn filled(width: usize, height: usize, resolution: f64, logodds: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain("grid dimensions must be positive"));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::domain(format!("resolution must be positive, got {resolution}")));
        }
        Ok(Self {
            width,
            height,
            resolution,
            logodds: vec![clamp_logodds(logodds); width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < self.width as f64 * self.resolution && y < self.height as f64 * self.resolution
    }

    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        self.contains_point(x, y).then(|| {
            let cx = ((x / self.resolution).floor() as usize).min(self.width - 1);
            let cy = ((y / self.resolution).floor() as usize).min(self.height - 1);
            Cell::new(cx, cy)
        })
    }

    fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.y * self.width + cell.x
    }

    pub fn logodds(&self, cell: Cell) -> f64 {
        self.logodds[self.index(cell)]
    }

    pub fn set_logodds(&mut self, cell: Cell, l: f64) {
        let i = self.index(cell);
        self.logodds[i] = clamp_logodds(l);
    }

    /// Adds evidence and re-clamps.
    pub fn add_logodds(&mut self, cell: Cell, delta: f64) {
        let i = self.index(cell);
        self.logodds[i] = clamp_logodds(self.logodds[i] + delta);
    }

    pub fn probability(&self, cell: Cell) -> f64 {
        logistic(self.logodds(cell))
    }

    pub fn entropy(&self, cell: Cell) -> f64 {
        logodds_entropy(self.logodds(cell))
    }

    /// A truth-style reading: positive log-odds means occupied.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.logodds(cell) > 0.0
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    pub fn total_entropy(&self) -> f64 {
        self.logodds.iter().map(|l| logodds_entropy(*l)).sum()
    }

    /// Probabilities as CSV, one grid row per line starting at `y = 0`.
    pub fn to_probability_csv(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            let row: Vec<String> = (0..self.width)
                .map(|x| format!("{:.6}", self.probability(Cell::new(x, y))))
                .collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(voxel_entropy(0.5).unwrap(), 1.0);
        assert_eq!(voxel_entropy(0.0).unwrap(), 0.0);
        assert_eq!(voxel_entropy(1.0).unwrap(), 0.0);
        // −0.25·log2 0.25 − 0.75·log2 0.75
        assert!((voxel_entropy(0.25).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!(voxel_entropy(1.5).is_err());
        assert!(voxel_entropy(-0.1).is_err());
        assert!(voxel_entropy(f64::NAN).is_err());
    }

    #[test]
    fn logodds_clamp_keeps_entropy_positive() {
        let mut g = OccupancyGrid::unknown(2, 2, 1.0).unwrap();
        let c = Cell::new(1, 1);
        g.add_logodds(c, 100.0);
        assert_eq!(g.logodds(c), LOGODDS_LIMIT);
        assert!(g.entropy(c) > 0.0 && g.entropy(c) < 1e-3);
        assert!((1.0 - g.probability(c) - 4.54e-5).abs() < 1e-6);
    }

    #[test]
    fn cell_lookup() {
        let g = OccupancyGrid::unknown(4, 3, 0.5).unwrap();
        assert_eq!(g.cell_at(0.2, 1.4), Some(Cell::new(0, 2)));
        assert_eq!(g.cell_at(2.0, 0.0), None);
        assert_eq!(g.cell_at(-0.1, 0.0), None);
        assert!(OccupancyGrid::unknown(0, 3, 1.0).is_err());
    }
}
