//! Ground-truth worlds: static occupancy plus flicker cells whose occupancy is
//! redrawn every tick.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use super::grid::{Cell, OccupancyGrid, Pose, LOGODDS_LIMIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    truth: OccupancyGrid,
    walls: Vec<bool>,
    flicker: Vec<bool>,
}

impl World {
    /// Builds a world from wall and flicker masks, `x` fastest. Flicker
    /// cells start free.
    pub fn new(width: usize, height: usize, resolution: f64, walls: Vec<bool>, flicker: Vec<bool>) -> Result<Self> {
        let truth = OccupancyGrid::filled(width, height, resolution, -LOGODDS_LIMIT)?;
        if walls.len() != width * height || flicker.len() != width * height {
            return Err(Error::domain("mask length does not match grid size"));
        }
        if walls.iter().zip(&flicker).any(|(w, f)| *w && *f) {
            return Err(Error::domain("a cell cannot be both wall and flicker"));
        }
        let mut world = Self { truth, walls, flicker };
        for c in world.truth.cells().collect::<Vec<_>>() {
            if world.walls[world.index(c)] {
                world.truth.set_logodds(c, LOGODDS_LIMIT);
            }
        }
        Ok(world)
    }

    fn index(&self, c: Cell) -> usize {
        c.y * self.truth.width() + c.x
    }

    pub fn truth(&self) -> &OccupancyGrid {
        &self.truth
    }

    pub fn width(&self) -> usize {
        self.truth.width()
    }

    pub fn height(&self) -> usize {
        self.truth.height()
    }

    pub fn resolution(&self) -> f64 {
        self.truth.resolution()
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.walls[self.index(c)]
    }

    pub fn is_flicker(&self, c: Cell) -> bool {
        self.flicker[self.index(c)]
    }

    pub fn flicker_cells(&self) -> Vec<Cell> {
        self.truth.cells().filter(|&c| self.is_flicker(c)).collect()
    }

    /// Cells the robot may stand on: never walls or flicker cells.
    pub fn is_traversable(&self, c: Cell) -> bool {
        self.truth.contains(c) && !self.is_wall(c) && !self.is_flicker(c)
    }

    /// Free cell nearest the grid centre, ties broken by `(y, x)`.
    pub fn start_cell(&self) -> Option<Cell> {
        let (cx, cy) = (self.width() as f64 / 2.0 - 0.5, self.height() as f64 / 2.0 - 0.5);
        self.truth.cells().filter(|&c| self.is_traversable(c)).min_by(|a, b| {
            let da = (a.x as f64 - cx).powi(2) + (a.y as f64 - cy).powi(2);
            let db = (b.x as f64 - cx).powi(2) + (b.y as f64 - cy).powi(2);
            da.total_cmp(&db).then((a.y, a.x).cmp(&(b.y, b.x)))
        })
    }

    pub fn start_pose(&self) -> Option<Pose> {
        self.start_cell().map(|c| Pose::at_cell(c, self.resolution(), 0.0))
    }

    /// Redraws every flicker cell as occupied with probability 1/2.
    pub fn tick<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.flicker.len() {
            if self.flicker[i] {
                let c = Cell::new(i % self.width(), i / self.width());
                let l = if rng.random_bool(0.5) {
                    LOGODDS_LIMIT
                } else {
                    -LOGODDS_LIMIT
                };
                self.truth.set_logodds(c, l);
            }
        }
    }

    /// Text form: `width height resolution`, then one row per line with `y = 0`
    /// first, using `#` wall, `.` free and `~` flicker.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.width(), self.height(), self.resolution()).unwrap();
        for y in 0..self.height() {
            for x in 0..self.width() {
                let c = Cell::new(x, y);
                out.push(if self.is_wall(c) {
                    '#'
                } else if self.is_flicker(c) {
                    '~'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    /// Parses a world from a character layout; rows are listed from `y = 0`.
    pub fn from_layout(rows: &[&str], resolution: f64) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut text = format!("{width} {height} {resolution}\n");
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        text.parse()
    }
}

impl FromStr for World {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "empty world file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(ln + 1, "header needs width, height, resolution"));
        }
        let bad = |t: &str| Error::parse(ln + 1, format!("bad header field {t:?}"));
        let width: usize = fields[0].parse().map_err(|_| bad(fields[0]))?;
        let height: usize = fields[1].parse().map_err(|_| bad(fields[1]))?;
        let resolution: f64 = fields[2].parse().map_err(|_| bad(fields[2]))?;
        let mut walls = Vec::with_capacity(width * height);
        let mut flicker = Vec::with_capacity(width * height);
        for row in 0..height {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(ln + 2 + row, format!("expected {height} rows")))?;
            let line = line.trim_end();
            if line.chars().count() != width {
                return Err(Error::parse(ln + 1, format!("row must have {width} cells")));
            }
            for ch in line.chars() {
                let (w, f) = match ch {
                    '#' => (true, false),
                    '.' => (false, false),
                    '~' => (false, true),
                    other => return Err(Error::parse(ln + 1, format!("unknown cell {other:?}"))),
                };
                walls.push(w);
                flicker.push(f);
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln + 1, "trailing rows"));
        }
        World::new(width, height, resolution, walls, flicker).map_err(|e| Error::parse(1, e.to_string()))
    }
}

/// Built-in scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Rooms joined by doorways; views overlap heavily.
    Rooms,
    /// Open hall with a block of flicker cells.
    Flicker,
    /// Rooms plus flicker blocks; pair it with impulse noise.
    Mixed,
    /// Random 5×5 world drawn from the seed.
    Tiny,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rooms" => Ok(Scenario::Rooms),
            "flicker" => Ok(Scenario::Flicker),
            "mixed" => Ok(Scenario::Mixed),
            "tiny" => Ok(Scenario::Tiny),
            other => Err(Error::domain(format!("unknown scenario {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Rooms => "rooms",
            Scenario::Flicker => "flicker",
            Scenario::Mixed => "mixed",
            Scenario::Tiny => "tiny",
        })
    }
}

const ROOMS: &[&str] = &[
    "########################",
    "#..........#...........#",
    "#..........#...........#",
    "#..........#...........#",
    "#..........#...........#",
    "#......................#",
    "#......................#",
    "#..........#...........#",
    "#..........#...........#",
    "#####..#########..######",
    "#..........#...........#",
    "#..........#...........#",
    "#..........#...........#",
    "#......................#",
    "#......................#",
    "#..........#...........#",
    "#..........#...........#",
    "#####..#########..######",
    "#..........#...........#",
    "#..........#...........#",
    "#......................#",
    "#......................#",
    "#..........#...........#",
    "########################",
];

const FLICKER: &[&str] = &[
    "################",
    "#..............#",
    "#..............#",
    "#...~~~~.......#",
    "#...~~~~.......#",
    "#...~~~~.......#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#.......~~~~...#",
    "#.......~~~~...#",
    "#.......~~~~...#",
    "#..............#",
    "#..............#",
    "#..............#",
    "################",
];

const MIXED: &[&str] = &[
    "########################",
    "#..........#...........#",
    "#..~~~.....#.....~~~...#",
    "#..~~~.....#.....~~~...#",
    "#..........#...........#",
    "#......................#",
    "#......................#",
    "#..........#...........#",
    "#..........#...........#",
    "#####..#########..######",
    "#..........#...........#",
    "#..........#....~~~....#",
    "#...~~~....#....~~~....#",
    "#...~~~................#",
    "#......................#",
    "#..........#...........#",
    "#..........#...........#",
    "#####..#########..######",
    "#..........#...........#",
    "#....~~~...#...........#",
    "#....~~~...............#",
    "#......................#",
    "#..........#.....~~~...#",
    "########################",
];

impl Scenario {
    /// Builds the scenario world. Only [`Scenario::Tiny`] uses the RNG.
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<World> {
        match self {
            Scenario::Rooms => World::from_layout(ROOMS, 1.0),
            Scenario::Flicker => World::from_layout(FLICKER, 1.0),
            Scenario::Mixed => World::from_layout(MIXED, 1.0),
            Scenario::Tiny => random_world(5, 5, 0.2, rng),
        }
    }
}

/// Random world whose cells are walls with probability `wall_rate`; the
/// centre cell is always free.
pub fn random_world<R: Rng + ?Sized>(width: usize, height: usize, wall_rate: f64, rng: &mut R) -> Result<World> {
    if !(0.0..1.0).contains(&wall_rate) {
        return Err(Error::domain("wall rate must lie in [0, 1)"));
    }
    let mut walls: Vec<bool> = (0..width * height).map(|_| rng.random_bool(wall_rate)).collect();
    let centre = (height / 2) * width + width / 2;
    walls[centre] = false;
    World::new(width, height, 1.0, walls, vec![false; width * height])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in [Scenario::Rooms, Scenario::Flicker, Scenario::Mixed, Scenario::Tiny] {
            let w = s.build(&mut rng).unwrap();
            let back: World = w.to_text().parse().unwrap();
            assert_eq!(back, w);
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = "3 2 1\n#.#\n#x#\n".parse::<World>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!("3 2 1\n#.#\n".parse::<World>().is_err());
        assert!("3 1\n#.#\n".parse::<World>().is_err());
    }

    #[test]
    fn flicker_rate_is_half() {
        let mut w = Scenario::Flicker.build(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let cells = w.flicker_cells();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut occupied = 0usize;
        for _ in 0..200 {
            w.tick(&mut rng);
            occupied += cells.iter().filter(|&&c| w.truth().is_occupied(c)).count();
        }
        let rate = occupied as f64 / (200 * cells.len()) as f64;
        assert!((rate - 0.5).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn start_is_traversable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in [Scenario::Rooms, Scenario::Flicker, Scenario::Mixed, Scenario::Tiny] {
            let w = s.build(&mut rng).unwrap();
            assert!(w.is_traversable(w.start_cell().unwrap()));
        }
    }
}
