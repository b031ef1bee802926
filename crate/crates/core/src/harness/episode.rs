use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{EstimatorMode, ExperimentConfig, WorldSource};
use crate::error::{Error, Result};
use crate::estimator::{randomization_level, BanditContext, ImprovementFunction};
use crate::gridworld::{
    footprint, logodds_update, sensor_observe, specific_info_gain, Cell, OccupancyGrid, Pose, SensorConfig, World,
};
use crate::planner::{
    argmax, attempt_move, exhaustive_best_path, exhaustive_best_score, realized_path_gains, sample_candidates,
    score_path, select_path, select_uniform, signed_normalize, CandidatePath, PlannerConfig, SelectionMode,
    EXHAUSTIVE_MAX_HORIZON, EXHAUSTIVE_MAX_SIDE,
};
use crate::regret_lab::{
    estimation_regret, perception_regret, Feedback, PerceptionRegretReport, RegretLedger, RegretSummary, RoundTrace,
};
use crate::stats::mean;

/// One sensing step, executed or simulated for a non-executed candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub position: usize,
    pub cell: Cell,
    /// Expected gain `r` the planner scored for this position.
    pub expected: f64,
    /// Realized gain `r*`, signed.
    pub realized: f64,
    /// `r − r*`.
    pub discrepancy: f64,
    pub bin: usize,
    pub executed: bool,
    /// Probability the selection rule gave this record's path.
    pub probability: f64,
    /// Improvement-function estimate used for planning.
    pub prediction: f64,
    /// Cells the sensor can reach from the pose; the gain normaliser.
    pub footprint: usize,
}

impl StepRecord {
    /// `|f(s, r) − r*|` with `r*` clamped into `[0, β]`.
    pub fn corrected_error(&self, gain_cap: f64) -> f64 {
        (self.prediction - self.realized.clamp(0.0, gain_cap)).abs()
    }

    /// `|r − r*|` with both gains clamped into `[0, β]`.
    pub fn raw_error(&self, gain_cap: f64) -> f64 {
        (self.expected.clamp(0.0, gain_cap) - self.realized.clamp(0.0, gain_cap)).abs()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub planning: Duration,
    pub execution: Duration,
    pub learning: Duration,
    pub oracle: Duration,
}

#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub seed: u64,
    pub estimator: EstimatorMode,
    pub feedback: Feedback,
    pub gain_cap: f64,
    pub tau: f64,
    /// Executed steps, in order.
    pub records: Vec<StepRecord>,
    /// Simulated outcomes of candidates that were not executed.
    pub counterfactuals: Vec<StepRecord>,
    pub final_belief: OccupancyGrid,
    pub function: ImprovementFunction,
    pub ledger: RegretLedger,
    /// Per-burst hindsight comparison; only on enumerable worlds.
    pub trace: Option<Vec<RoundTrace>>,
    pub timings: PhaseTimings,
}

/// Logs compare equal when everything but wall-clock time matches.
impl PartialEq for EpisodeLog {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.estimator == other.estimator
            && self.feedback == other.feedback
            && self.gain_cap == other.gain_cap
            && self.tau == other.tau
            && self.records == other.records
            && self.counterfactuals == other.counterfactuals
            && self.final_belief == other.final_belief
            && self.function == other.function
            && self.ledger == other.ledger
            && self.trace == other.trace
    }
}

impl EpisodeLog {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    pub fn regret(&self) -> Result<RegretSummary> {
        estimation_regret(&self.ledger, Some(&self.function))
    }

    pub fn perception(&self) -> Result<PerceptionRegretReport> {
        let trace = self
            .trace
            .as_ref()
            .ok_or_else(|| Error::Refused("world too large for the exhaustive comparator".into()))?;
        perception_regret(
            trace,
            &self.regret()?,
            self.function.horizon(),
            self.function.bins(),
            self.steps(),
        )
    }

    fn after_burn_in(&self, burn_in: f64) -> &[StepRecord] {
        let skip = ((self.records.len() as f64) * burn_in).ceil() as usize;
        &self.records[skip.min(self.records.len())..]
    }

    /// Mean error of the estimate the planner used, after skipping the first
    /// `burn_in` fraction of steps.
    pub fn mean_corrected_error(&self, burn_in: f64) -> f64 {
        let errs: Vec<f64> = self
            .after_burn_in(burn_in)
            .iter()
            .map(|r| r.corrected_error(self.gain_cap))
            .collect();
        mean(&errs)
    }

    /// Mean error of the raw expected gain on the same steps.
    pub fn mean_raw_error(&self, burn_in: f64) -> f64 {
        let errs: Vec<f64> = self
            .after_burn_in(burn_in)
            .iter()
            .map(|r| r.raw_error(self.gain_cap))
            .collect();
        mean(&errs)
    }

    /// Sum of signed realized gains over executed steps.
    pub fn cumulative_gain(&self) -> f64 {
        self.records.iter().map(|r| r.realized).sum()
    }

    /// Executed steps as CSV.
    pub fn records_csv(&self) -> String {
        let mut out = String::from(
            "step,position,x,y,expected,realized,discrepancy,bin,executed,probability,prediction,footprint\n",
        );
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.step,
                r.position,
                r.cell.x,
                r.cell.y,
                r.expected,
                r.realized,
                r.discrepancy,
                r.bin,
                r.executed,
                r.probability,
                r.prediction,
                r.footprint
            )
            .unwrap();
        }
        out
    }
}

/// An episode that stopped early, with everything recorded up to that point.
#[derive(Debug)]
pub struct EpisodeFailure {
    pub error: Error,
    pub partial: Option<Box<EpisodeLog>>,
}

impl std::fmt::Display for EpisodeFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.partial {
            Some(log) => write!(f, "{} after {} steps", self.error, log.steps()),
            None => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for EpisodeFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for EpisodeFailure {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

// Independent random streams of one episode.
const WORLD_STREAM: u64 = 1;
const FLICKER_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const PLANNER_STREAM: u64 = 4;
const SELECTION_STREAM: u64 = 5;
const COUNTERFACTUAL_STREAM: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Builds the ground-truth world for a seed.
pub fn build_world(config: &ExperimentConfig, seed: u64) -> Result<World> {
    match &config.world {
        WorldSource::Scenario(s) => s.build(&mut stream(seed, WORLD_STREAM)),
        WorldSource::File(path) => std::fs::read_to_string(path)?.parse(),
    }
}

/// Executes one observation at `target` and returns the record fields that
/// depend on the world.
struct Sensed {
    cell: Cell,
    realized: f64,
    footprint: usize,
}

#[allow(clippy::too_many_arguments)]
fn sense_step(
    world: &mut World,
    belief: &mut OccupancyGrid,
    at: Cell,
    target: Cell,
    sensor: &SensorConfig,
    gain_cap: f64,
    flicker_rng: &mut ChaCha8Rng,
    noise_rng: &mut ChaCha8Rng,
) -> Result<Sensed> {
    world.tick(flicker_rng);
    let next = attempt_move(world, at, target);
    let heading = (target.y as f64 - at.y as f64).atan2(target.x as f64 - at.x as f64);
    let pose = Pose::at_cell(next, world.resolution(), heading);
    let before = belief.clone();
    let obs = sensor_observe(world.truth(), &pose, sensor, noise_rng)?;
    let touched = logodds_update(belief, &obs, sensor.l_hit, sensor.l_miss)?;
    let bits = specific_info_gain(&before, belief, &touched)?;
    let n = footprint(belief, &pose, sensor).len();
    Ok(Sensed {
        cell: next,
        realized: signed_normalize(bits, n, gain_cap),
        footprint: n,
    })
}

fn record(
    step: usize,
    position: usize,
    path: &CandidatePath,
    sensed: &Sensed,
    f: &ImprovementFunction,
    executed: bool,
    probability: f64,
) -> StepRecord {
    let expected = path.raw_gains[position];
    StepRecord {
        step,
        position,
        cell: sensed.cell,
        expected,
        realized: sensed.realized,
        discrepancy: expected - sensed.realized,
        bin: f.bin_of(expected),
        executed,
        probability,
        prediction: path.corrected_gains[position],
        footprint: sensed.footprint,
    }
}

/// Runs one seeded episode of `config.steps` executed observations.
///
/// Each burst samples candidate paths, scores them, selects one and executes
/// it step by step (flicker tick, move, sense, belief update). The
/// improvement function is updated once per burst.
pub fn run_episode(config: &ExperimentConfig, seed: u64) -> Result<EpisodeLog, EpisodeFailure> {
    config.validate()?;
    let sensor = config.sensor();
    let cap = config.gain_cap;
    let mut world = build_world(config, seed)?;
    let mut belief = OccupancyGrid::unknown(world.width(), world.height(), world.resolution())?;
    let mut at = world
        .start_cell()
        .ok_or_else(|| Error::Planning("world has no free cell to start from".into()))?;
    let mut flicker_rng = stream(seed, FLICKER_STREAM);
    let mut noise_rng = stream(seed, NOISE_STREAM);
    let mut planner_rng = stream(seed, PLANNER_STREAM);
    let mut selection_rng = stream(seed, SELECTION_STREAM);

    // initial scan from the start cell, not counted as a step
    world.tick(&mut flicker_rng);
    let start_pose = Pose::at_cell(at, world.resolution(), 0.0);
    let obs = sensor_observe(world.truth(), &start_pose, &sensor, &mut noise_rng)?;
    logodds_update(&mut belief, &obs, sensor.l_hit, sensor.l_miss)?;

    let mut f = ImprovementFunction::new(config.horizon, config.bins, cap, config.coefficient)?;
    let identity = f.clone();
    let mut ledger = RegretLedger::for_function(&f);
    let tau = match config.tau {
        Some(t) => t,
        None => randomization_level(config.steps.max(1) as i64)?,
    };
    let bandit = BanditContext::new(tau, config.candidates, config.horizon)?;
    let explore = config.estimator == EstimatorMode::Corrected
        && config.feedback == Feedback::Bandit
        && config.execute_exploration;
    let planner = PlannerConfig {
        candidate_count: config.candidates,
        horizon: config.horizon,
        randomization_level: if explore { tau } else { 0.0 },
        mode: match config.estimator {
            EstimatorMode::Random => SelectionMode::Random,
            _ => SelectionMode::Greedy,
        },
    };
    let enumerable = world.width() <= EXHAUSTIVE_MAX_SIDE
        && world.height() <= EXHAUSTIVE_MAX_SIDE
        && config.horizon <= EXHAUSTIVE_MAX_HORIZON;

    let mut log = EpisodeLog {
        seed,
        estimator: config.estimator,
        feedback: config.feedback,
        gain_cap: cap,
        tau,
        records: Vec::with_capacity(config.steps),
        counterfactuals: Vec::new(),
        final_belief: belief.clone(),
        function: f.clone(),
        ledger: ledger.clone(),
        trace: enumerable.then(Vec::new),
        timings: PhaseTimings::default(),
    };

    let mut burst = 0u64;
    while log.records.len() < config.steps {
        let clock = Instant::now();
        let pose = Pose::at_cell(at, world.resolution(), 0.0);
        let scoring = if config.estimator == EstimatorMode::Corrected {
            &f
        } else {
            &identity
        };
        let planned = sample_candidates(&belief, &pose, &planner, &mut planner_rng).and_then(|paths| {
            paths
                .iter()
                .map(|p| score_path(&belief, at, p, scoring, &sensor))
                .collect::<Result<Vec<_>>>()
        });
        let candidates = match planned {
            Ok(c) => c,
            Err(error) => {
                log.final_belief = belief;
                log.function = f;
                log.ledger = ledger;
                return Err(EpisodeFailure {
                    error,
                    partial: Some(Box::new(log)),
                });
            }
        };
        let selection = match planner.mode {
            SelectionMode::Random => select_uniform(&candidates, &mut selection_rng)?,
            SelectionMode::Greedy => select_path(&candidates, planner.randomization_level, &mut selection_rng)?,
        };
        let chosen = &candidates[selection.index];
        log.timings.planning += clock.elapsed();

        if let Some(trace) = log.trace.as_mut() {
            let clock = Instant::now();
            let best = exhaustive_best_path(&world, &belief, at, config.horizon, &sensor, cap)?;
            let best_score = exhaustive_best_score(&belief, at, scoring, &sensor)?;
            let chosen_realized: f64 = realized_path_gains(&world, &belief, at, &chosen.cells, &sensor, cap)?
                .iter()
                .sum();
            trace.push(RoundTrace {
                chosen_realized,
                best_realized: best.map_or(0.0, |b| b.total),
                chosen_score: chosen.score,
                best_score: best_score.map_or(0.0, |b| b.total).max(chosen.score),
            });
            log.timings.oracle += clock.elapsed();
        }

        // counterfactual outcomes are simulated from the pre-burst state
        let positions = config.horizon.min(config.steps - log.records.len());
        let first_step = log.records.len();
        let mut simulated: Vec<(usize, Vec<StepRecord>)> = Vec::new();
        if config.feedback == Feedback::Full && config.estimator == EstimatorMode::Corrected {
            let clock = Instant::now();
            let derived = seed ^ burst.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut cf_flicker = stream(derived, COUNTERFACTUAL_STREAM);
            let mut cf_noise = stream(derived, COUNTERFACTUAL_STREAM + 1);
            let best = argmax(&candidates).unwrap_or(0);
            for (j, cand) in candidates.iter().enumerate() {
                if j == selection.index {
                    continue;
                }
                let tau = planner.randomization_level;
                let p = tau / candidates.len() as f64 + if j == best { 1.0 - tau } else { 0.0 };
                let mut w = world.clone();
                let mut b = belief.clone();
                let mut here = at;
                let mut recs = Vec::with_capacity(positions);
                for s in 0..positions {
                    let sensed = sense_step(
                        &mut w,
                        &mut b,
                        here,
                        cand.cells[s],
                        &sensor,
                        cap,
                        &mut cf_flicker,
                        &mut cf_noise,
                    )?;
                    here = sensed.cell;
                    recs.push(record(first_step + s, s, cand, &sensed, &f, false, p));
                }
                simulated.push((j, recs));
            }
            log.timings.execution += clock.elapsed();
        }

        let clock = Instant::now();
        let mut executed = Vec::with_capacity(positions);
        for s in 0..positions {
            let sensed = sense_step(
                &mut world,
                &mut belief,
                at,
                chosen.cells[s],
                &sensor,
                cap,
                &mut flicker_rng,
                &mut noise_rng,
            )?;
            at = sensed.cell;
            executed.push(record(
                first_step + s,
                s,
                chosen,
                &sensed,
                &f,
                true,
                selection.probability,
            ));
        }
        log.timings.execution += clock.elapsed();

        let clock = Instant::now();
        if config.estimator == EstimatorMode::Corrected {
            let weight = if explore {
                bandit.importance_weight(selection.probability)?
            } else {
                1.0
            };
            let mut batches: Vec<(usize, &[StepRecord], f64)> = vec![(selection.index, &executed, weight)];
            batches.extend(simulated.iter().map(|(j, recs)| (*j, recs.as_slice(), 1.0)));
            batches.sort_by_key(|(j, _, _)| *j);
            for (_, recs, w) in batches {
                for r in recs {
                    let update = f.update_weighted(r.position, r.expected, r.realized, w)?;
                    ledger.record(&f, &update, r.realized)?;
                }
            }
        }
        log.timings.learning += clock.elapsed();

        log.records.extend(executed);
        log.counterfactuals.extend(simulated.into_iter().flat_map(|(_, r)| r));
        burst += 1;
    }
    log.final_belief = belief;
    log.function = f;
    log.ledger = ledger;
    Ok(log)
}
