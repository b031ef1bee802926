//! Candidate paths on the lattice, corrected scoring and randomized selection.
//!
//! A path is a sequence of `Δt` 4-connected moves through cells the belief
//! considers free (log-odds below zero). Revisiting a cell is allowed.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimator::ImprovementFunction;
use crate::gridworld::gain::normalize;
use crate::gridworld::{
    expected_info_gain, footprint, logodds_update, roll_forward, sensor_observe, specific_info_gain, Cell,
    OccupancyGrid, Pose, SensorConfig, World,
};

/// Largest lattice side and horizon the exhaustive comparators accept.
pub const EXHAUSTIVE_MAX_SIDE: usize = 7;
pub const EXHAUSTIVE_MAX_HORIZON: usize = 3;

/// Horizons up to this length are enumerated exactly before sampling.
const ENUMERATION_MAX_HORIZON: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Best corrected score, mixed with uniform exploration at level τ.
    Greedy,
    /// Uniform over candidates.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub candidate_count: usize,
    pub horizon: usize,
    pub randomization_level: f64,
    pub mode: SelectionMode,
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidate_count < 2 {
            return Err(Error::domain("candidate count must be at least 2"));
        }
        if self.horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.randomization_level) {
            return Err(Error::domain(format!(
                "randomization level must lie in [0, 0.5), got {}",
                self.randomization_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePath {
    pub cells: Vec<Cell>,
    pub poses: Vec<Pose>,
    /// Expected gain per position, scored on the rolled-forward belief.
    pub raw_gains: Vec<f64>,
    /// Improvement-function estimate per position.
    pub corrected_gains: Vec<f64>,
    pub score: f64,
}

impl CandidatePath {
    pub fn raw_score(&self) -> f64 {
        self.raw_gains.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// Probability the selection rule had of returning this candidate.
    pub probability: f64,
    /// Whether the exploration branch made the choice.
    pub explored: bool,
}

const MOVES: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

fn neighbours(belief: &OccupancyGrid, c: Cell) -> impl Iterator<Item = Cell> + '_ {
    MOVES.iter().filter_map(move |&(dx, dy)| {
        let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
        if x < 0 || y < 0 {
            return None;
        }
        let n = Cell::new(x as usize, y as usize);
        (belief.contains(n) && belief.logodds(n) < 0.0).then_some(n)
    })
}

/// Every path of exactly `horizon` moves from `start` through believed-free
/// cells, in depth-first order (east, north, west, south).
pub fn feasible_paths(belief: &OccupancyGrid, start: Cell, horizon: usize) -> Vec<Vec<Cell>> {
    fn dfs(belief: &OccupancyGrid, at: Cell, left: usize, prefix: &mut Vec<Cell>, out: &mut Vec<Vec<Cell>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for n in neighbours(belief, at) {
            prefix.push(n);
            dfs(belief, n, left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if belief.contains(start) {
        dfs(belief, start, horizon, &mut Vec::with_capacity(horizon), &mut out);
    }
    out
}

fn random_walks<R: Rng + ?Sized>(
    belief: &OccupancyGrid,
    start: Cell,
    horizon: usize,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<Cell>> {
    let mut found: Vec<Vec<Cell>> = Vec::new();
    for _ in 0..200 * count {
        if found.len() == count {
            break;
        }
        let mut at = start;
        let mut walk = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let options: Vec<Cell> = neighbours(belief, at).collect();
            if options.is_empty() {
                break;
            }
            at = options[rng.random_range(0..options.len())];
            walk.push(at);
        }
        if walk.len() == horizon && !found.contains(&walk) {
            found.push(walk);
        }
    }
    found
}

/// Draws up to `N` distinct feasible paths. Fewer are returned only when
/// fewer exist.
pub fn sample_candidates<R: Rng + ?Sized>(
    belief: &OccupancyGrid,
    pose: &Pose,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<Vec<Vec<Cell>>> {
    config.validate()?;
    let start = belief
        .cell_at(pose.x, pose.y)
        .ok_or_else(|| Error::domain("pose outside the grid"))?;
    let paths = if config.horizon <= ENUMERATION_MAX_HORIZON {
        let all = feasible_paths(belief, start, config.horizon);
        if all.len() <= config.candidate_count {
            all
        } else {
            let mut picked = sample(rng, all.len(), config.candidate_count).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| all[i].clone()).collect()
        }
    } else {
        random_walks(belief, start, config.horizon, config.candidate_count, rng)
    };
    if paths.is_empty() {
        return Err(Error::Planning(format!(
            "no feasible path of length {} from cell ({}, {})",
            config.horizon, start.x, start.y
        )));
    }
    Ok(paths)
}

fn heading(from: Cell, to: Cell) -> f64 {
    (to.y as f64 - from.y as f64).atan2(to.x as f64 - from.x as f64)
}

fn poses_along(start: Cell, cells: &[Cell], resolution: f64) -> Vec<Pose> {
    let mut prev = start;
    cells
        .iter()
        .map(|&c| {
            let p = Pose::at_cell(c, resolution, heading(prev, c));
            prev = c;
            p
        })
        .collect()
}

/// Scores a path: position `s` is evaluated on the belief rolled forward with
/// the most likely outcome at positions `0..s`, then corrected through `f`.
pub fn score_path(
    belief: &OccupancyGrid,
    start: Cell,
    cells: &[Cell],
    f: &ImprovementFunction,
    sensor: &SensorConfig,
) -> Result<CandidatePath> {
    if cells.len() != f.horizon() {
        return Err(Error::domain(format!(
            "path length {} does not match horizon {}",
            cells.len(),
            f.horizon()
        )));
    }
    let poses = poses_along(start, cells, belief.resolution());
    let mut hypothetical = belief.clone();
    let mut raw_gains = Vec::with_capacity(cells.len());
    let mut corrected_gains = Vec::with_capacity(cells.len());
    for (s, pose) in poses.iter().enumerate() {
        let r = expected_info_gain(&hypothetical, pose, sensor)?.normalized(f.gain_cap());
        raw_gains.push(r);
        corrected_gains.push(f.query(s, r)?);
        if s + 1 < poses.len() {
            roll_forward(&mut hypothetical, pose, sensor)?;
        }
    }
    Ok(CandidatePath {
        cells: cells.to_vec(),
        poses,
        raw_gains,
        score: corrected_gains.iter().sum(),
        corrected_gains,
    })
}

/// Index of the highest score; ties go to the lowest index.
pub fn argmax_score(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn argmax(candidates: &[CandidatePath]) -> Option<usize> {
    argmax_score(&candidates.iter().map(|c| c.score).collect::<Vec<_>>())
}

/// With probability `1 − τ` the best score, otherwise a uniform draw. The
/// reported probability is `τ/N + (1 − τ)·[argmax]`.
pub fn select_by_score<R: Rng + ?Sized>(scores: &[f64], tau: f64, rng: &mut R) -> Result<Selection> {
    let best = argmax_score(scores).ok_or_else(|| Error::domain("no candidates to select from"))?;
    if !(0.0..0.5).contains(&tau) {
        return Err(Error::domain(format!(
            "randomization level must lie in [0, 0.5), got {tau}"
        )));
    }
    let n = scores.len() as f64;
    let explored = tau > 0.0 && rng.random_bool(tau);
    let index = if explored {
        rng.random_range(0..scores.len())
    } else {
        best
    };
    let probability = tau / n + if index == best { 1.0 - tau } else { 0.0 };
    Ok(Selection {
        index,
        probability,
        explored,
    })
}

pub fn select_path<R: Rng + ?Sized>(candidates: &[CandidatePath], tau: f64, rng: &mut R) -> Result<Selection> {
    select_by_score(&candidates.iter().map(|c| c.score).collect::<Vec<_>>(), tau, rng)
}

/// Uniform choice with probability `1/N`.
pub fn select_uniform<R: Rng + ?Sized>(candidates: &[CandidatePath], rng: &mut R) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::domain("no candidates to select from"));
    }
    Ok(Selection {
        index: rng.random_range(0..candidates.len()),
        probability: 1.0 / candidates.len() as f64,
        explored: true,
    })
}

/// Cell the robot occupies after trying to move from `at` to `target`:
/// blocked moves leave it in place.
pub fn attempt_move(world: &World, at: Cell, target: Cell) -> Cell {
    let adjacent = at.x.abs_diff(target.x) + at.y.abs_diff(target.y) == 1;
    if adjacent && world.is_traversable(target) {
        target
    } else {
        at
    }
}

/// Realized gain per position of following `cells` from `start` with the
/// noiseless sensor against a frozen snapshot of `world`.
pub fn realized_path_gains(
    world: &World,
    belief: &OccupancyGrid,
    start: Cell,
    cells: &[Cell],
    sensor: &SensorConfig,
    gain_cap: f64,
) -> Result<Vec<f64>> {
    let sensor = sensor.noiseless();
    let mut belief = belief.clone();
    let mut at = start;
    // the noiseless sensor never draws from the stream
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut gains = Vec::with_capacity(cells.len());
    for &target in cells {
        let next = attempt_move(world, at, target);
        let pose = Pose::at_cell(next, world.resolution(), heading(at, target));
        at = next;
        let before = belief.clone();
        let obs = sensor_observe(world.truth(), &pose, &sensor, &mut rng)?;
        let touched = logodds_update(&mut belief, &obs, sensor.l_hit, sensor.l_miss)?;
        let bits = specific_info_gain(&before, &belief, &touched)?;
        let n = footprint(&belief, &pose, &sensor).len();
        gains.push(signed_normalize(bits, n, gain_cap));
    }
    Ok(gains)
}

/// Per-cell normalisation that keeps the sign, clamped into `[−β, β]`.
pub fn signed_normalize(bits: f64, footprint: usize, gain_cap: f64) -> f64 {
    if bits >= 0.0 {
        normalize(bits, footprint, gain_cap)
    } else {
        -normalize(-bits, footprint, gain_cap)
    }
}

/// A path found by exhaustive enumeration with its per-position values.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub cells: Vec<Cell>,
    pub gains: Vec<f64>,
    pub total: f64,
}

fn check_enumerable(belief: &OccupancyGrid, horizon: usize) -> Result<()> {
    if belief.width() > EXHAUSTIVE_MAX_SIDE || belief.height() > EXHAUSTIVE_MAX_SIDE {
        return Err(Error::Refused(format!(
            "exhaustive search needs a lattice of at most {0}x{0}, got {1}x{2}",
            EXHAUSTIVE_MAX_SIDE,
            belief.width(),
            belief.height()
        )));
    }
    if horizon > EXHAUSTIVE_MAX_HORIZON {
        return Err(Error::Refused(format!(
            "exhaustive search needs horizon at most {EXHAUSTIVE_MAX_HORIZON}, got {horizon}"
        )));
    }
    Ok(())
}

fn best_of(paths: Vec<Vec<Cell>>, mut value: impl FnMut(&[Cell]) -> Result<Vec<f64>>) -> Result<Option<OraclePath>> {
    let mut best: Option<OraclePath> = None;
    for cells in paths {
        let gains = value(&cells)?;
        let total: f64 = gains.iter().sum();
        if best.as_ref().is_none_or(|b| total > b.total) {
            best = Some(OraclePath { cells, gains, total });
        }
    }
    Ok(best)
}

/// Feasible path with the largest realized gain against the current truth,
/// using the noiseless sensor. `None` when no path is feasible.
pub fn exhaustive_best_path(
    world: &World,
    belief: &OccupancyGrid,
    start: Cell,
    horizon: usize,
    sensor: &SensorConfig,
    gain_cap: f64,
) -> Result<Option<OraclePath>> {
    check_enumerable(belief, horizon)?;
    best_of(feasible_paths(belief, start, horizon), |cells| {
        realized_path_gains(world, belief, start, cells, sensor, gain_cap)
    })
}

/// Feasible path with the largest corrected score, the reference for the
/// empirical approximation ratio of sampled greedy selection.
pub fn exhaustive_best_score(
    belief: &OccupancyGrid,
    start: Cell,
    f: &ImprovementFunction,
    sensor: &SensorConfig,
) -> Result<Option<OraclePath>> {
    check_enumerable(belief, f.horizon())?;
    best_of(feasible_paths(belief, start, f.horizon()), |cells| {
        Ok(score_path(belief, start, cells, f, sensor)?.corrected_gains)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::LOGODDS_LIMIT;

    fn open(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::filled(w, h, 1.0, -1.0).unwrap()
    }

    fn config(n: usize, horizon: usize) -> PlannerConfig {
        PlannerConfig {
            candidate_count: n,
            horizon,
            randomization_level: 0.0,
            mode: SelectionMode::Greedy,
        }
    }

    fn scored(scores: &[f64]) -> Vec<CandidatePath> {
        scores
            .iter()
            .map(|&s| CandidatePath {
                cells: vec![],
                poses: vec![],
                raw_gains: vec![s],
                corrected_gains: vec![s],
                score: s,
            })
            .collect()
    }

    #[test]
    fn open_lattice_gives_distinct_adjacent_paths() {
        let belief = open(11, 11);
        let pose = Pose::new(5.5, 5.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths = sample_candidates(&belief, &pose, &config(20, 5), &mut rng).unwrap();
        assert_eq!(paths.len(), 20);
        for (i, p) in paths.iter().enumerate() {
            assert_eq!(p.len(), 5);
            let mut prev = Cell::new(5, 5);
            for &c in p {
                assert_eq!(prev.x.abs_diff(c.x) + prev.y.abs_diff(c.y), 1);
                prev = c;
            }
            assert!(!paths[..i].contains(p));
        }
        let again = sample_candidates(&belief, &pose, &config(20, 5), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(paths, again);
    }

    #[test]
    fn long_horizons_sample_walks() {
        let belief = open(15, 15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let paths = sample_candidates(&belief, &Pose::new(7.5, 7.5, 0.0), &config(10, 9), &mut rng).unwrap();
        assert_eq!(paths.len(), 10);
        assert!(paths.iter().all(|p| p.len() == 9));
    }

    #[test]
    fn boxed_in_pose_is_planning_error() {
        let mut belief = open(3, 3);
        for c in [Cell::new(0, 1), Cell::new(2, 1), Cell::new(1, 0), Cell::new(1, 2)] {
            belief.set_logodds(c, LOGODDS_LIMIT);
        }
        let err = sample_candidates(
            &belief,
            &Pose::new(1.5, 1.5, 0.0),
            &config(2, 1),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert!(matches!(err, Err(Error::Planning(_))));
    }

    #[test]
    fn identity_score_is_raw_sum() {
        let belief = OccupancyGrid::unknown(9, 9, 1.0).unwrap();
        let mut free = belief.clone();
        for c in belief.cells() {
            free.set_logodds(c, if c.y == 4 { -0.5 } else { 0.0 });
        }
        let f = ImprovementFunction::new(3, 20, 1.0, 4.0).unwrap();
        let path = [Cell::new(5, 4), Cell::new(6, 4), Cell::new(7, 4)];
        let c = score_path(&free, Cell::new(4, 4), &path, &f, &SensorConfig::default()).unwrap();
        assert!((c.score - c.raw_score()).abs() < 1e-12);
    }

    #[test]
    fn zeroed_table_scores_zero() {
        let belief = open(7, 7);
        let mut f = ImprovementFunction::new(2, 1, 1.0, 2.0).unwrap();
        // one update from the bin centre toward zero lands exactly on zero
        for s in 0..2 {
            f.update(s, 0.5, 0.0).unwrap();
        }
        let path = [Cell::new(4, 3), Cell::new(5, 3)];
        let c = score_path(&belief, Cell::new(3, 3), &path, &f, &SensorConfig::default()).unwrap();
        assert_eq!(c.score, 0.0);
    }

    #[test]
    fn greedy_without_exploration() {
        let cands = scored(&[0.1, 0.7, 0.3]);
        let sel = select_path(&cands, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((sel.index, sel.probability, sel.explored), (1, 1.0, false));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let cands = scored(&[0.2, 0.9, 0.9]);
        assert_eq!(argmax(&cands), Some(1));
    }

    #[test]
    fn explored_non_argmax_probability() {
        let cands = scored(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sel = (0..1000)
            .map(|_| select_path(&cands, 0.2, &mut rng).unwrap())
            .find(|s| s.index != 1)
            .unwrap();
        assert!(sel.explored);
        assert!((sel.probability - 0.02).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_refuses_large_instances() {
        let world = World::from_layout(&["........"; 8], 1.0).unwrap();
        let belief = open(8, 8);
        let err = exhaustive_best_path(&world, &belief, Cell::new(3, 3), 2, &SensorConfig::default(), 1.0);
        assert!(matches!(err, Err(Error::Refused(_))));
        let small = open(5, 5);
        let err = exhaustive_best_path(&world, &small, Cell::new(2, 2), 4, &SensorConfig::default(), 1.0);
        assert!(matches!(err, Err(Error::Refused(_))));
    }

    #[test]
    fn unique_path_to_unknown_cell() {
        // corridor: only moving east reaches new cells
        let world = World::from_layout(&["#####", "#...#", "#####"], 1.0).unwrap();
        let mut belief = OccupancyGrid::filled(5, 3, 1.0, LOGODDS_LIMIT).unwrap();
        belief.set_logodds(Cell::new(1, 1), -LOGODDS_LIMIT);
        belief.set_logodds(Cell::new(2, 1), -LOGODDS_LIMIT);
        belief.set_logodds(Cell::new(3, 1), 0.0);
        let sensor = SensorConfig {
            max_range: 3.0,
            ..SensorConfig::default()
        };
        let paths = feasible_paths(&belief, Cell::new(1, 1), 1);
        assert_eq!(paths, vec![vec![Cell::new(2, 1)]]);
        let best = exhaustive_best_path(&world, &belief, Cell::new(1, 1), 1, &sensor, 1.0)
            .unwrap()
            .unwrap();
        assert_eq!(best.cells, vec![Cell::new(2, 1)]);
    }

    #[test]
    fn known_world_returns_first_path() {
        let world = World::from_layout(&["....."; 5], 1.0).unwrap();
        let belief = OccupancyGrid::filled(5, 5, 1.0, -LOGODDS_LIMIT).unwrap();
        let best = exhaustive_best_path(&world, &belief, Cell::new(2, 2), 2, &SensorConfig::default(), 1.0)
            .unwrap()
            .unwrap();
        assert_eq!(best.cells, feasible_paths(&belief, Cell::new(2, 2), 2)[0]);
        assert!(best.total.abs() < 1e-9);
    }
}
