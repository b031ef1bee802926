//! Synthetic discrepancy game between the improvement function and an
//! adversary that chooses realized gains.
//!
//! Each round the learner sees `N` candidates, each a list of `Δt` cells
//! `(s, bin)` with bins drawn uniformly. The adversary fixes one realized
//! gain per distinct cell for the round. Candidates are scored through the
//! table and one is selected with [`select_by_score`]. Under full
//! information every observation updates the table; under bandit feedback
//! only the executed candidate does, with normalised importance weight
//! `(τ/N)/p`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ledger::{estimation_regret, LedgerEntry, RegretLedger, RegretSummary};
use crate::error::{Error, Result};
use crate::estimator::{randomization_level, BanditContext, ImprovementFunction, DEFAULT_UPDATE_COEFFICIENT};
use crate::planner::select_by_score;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adversary {
    /// `β` on even rounds, `0` on odd rounds.
    Alternating,
    /// `0` or `β` with equal probability.
    RandomExtreme,
    /// Per-cell level drawn once, plus uniform noise of width `0.6β`.
    Stochastic,
    /// `β` with a per-cell probability drawn once, else `0`.
    Mixture,
    /// The same realized gain every round.
    Constant(f64),
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adversary::Alternating => f.write_str("alternating"),
            Adversary::RandomExtreme => f.write_str("random"),
            Adversary::Stochastic => f.write_str("stochastic"),
            Adversary::Mixture => f.write_str("mixture"),
            Adversary::Constant(v) => write!(f, "constant:{v}"),
        }
    }
}

impl FromStr for Adversary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alternating" => Ok(Adversary::Alternating),
            "random" => Ok(Adversary::RandomExtreme),
            "stochastic" => Ok(Adversary::Stochastic),
            "mixture" => Ok(Adversary::Mixture),
            other => other
                .strip_prefix("constant:")
                .and_then(|v| v.parse().ok())
                .map(Adversary::Constant)
                .ok_or_else(|| Error::domain(format!("unknown adversary {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Full,
    Bandit,
}

impl fmt::Display for Feedback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Feedback::Full => "full",
            Feedback::Bandit => "bandit",
        })
    }
}

impl FromStr for Feedback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Feedback::Full),
            "bandit" => Ok(Feedback::Bandit),
            other => Err(Error::domain(format!("unknown feedback mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    pub rounds: usize,
    pub candidates: usize,
    pub horizon: usize,
    pub bins: usize,
    pub gain_cap: f64,
    pub coefficient: f64,
    pub adversary: Adversary,
    pub feedback: Feedback,
    /// τ for bandit feedback; `None` uses `T^{-1/4}`.
    pub randomization_level: Option<f64>,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            rounds: 256,
            candidates: 4,
            horizon: 2,
            bins: 10,
            gain_cap: 1.0,
            coefficient: DEFAULT_UPDATE_COEFFICIENT,
            adversary: Adversary::Stochastic,
            feedback: Feedback::Bandit,
            randomization_level: None,
        }
    }
}

impl GameConfig {
    pub fn tau(&self) -> Result<f64> {
        match self.randomization_level {
            Some(t) => Ok(t),
            None => randomization_level(self.rounds.max(1) as i64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub function: ImprovementFunction,
    /// Observations that updated the table, with the prediction each update
    /// started from. Agrees with the table's counters.
    pub executed: RegretLedger,
    /// Every candidate observation, predicted before the round's updates.
    pub complete: RegretLedger,
    pub tau: f64,
    pub explored_rounds: usize,
}

impl GameOutcome {
    /// Regret over the updates actually applied.
    pub fn executed_regret(&self) -> Result<RegretSummary> {
        estimation_regret(&self.executed, Some(&self.function))
    }

    /// Regret over every observation the adversary produced.
    pub fn complete_regret(&self) -> Result<RegretSummary> {
        estimation_regret(&self.complete, None)
    }

    /// The regret the feedback mode is judged on: executed updates under
    /// full information, every observation under bandit feedback.
    pub fn regret(&self, feedback: Feedback) -> Result<RegretSummary> {
        match feedback {
            Feedback::Full => self.executed_regret(),
            Feedback::Bandit => self.complete_regret(),
        }
    }
}

struct AdversaryState {
    kind: Adversary,
    gain_cap: f64,
    levels: HashMap<(usize, usize), f64>,
}

impl AdversaryState {
    fn realize<R: Rng + ?Sized>(&mut self, cell: (usize, usize), round: usize, rng: &mut R) -> f64 {
        let cap = self.gain_cap;
        let value = match self.kind {
            Adversary::Alternating => {
                if round.is_multiple_of(2) {
                    cap
                } else {
                    0.0
                }
            }
            Adversary::RandomExtreme => {
                if rng.random_bool(0.5) {
                    cap
                } else {
                    0.0
                }
            }
            Adversary::Stochastic => {
                let level = *self.levels.entry(cell).or_insert_with(|| rng.random::<f64>() * cap);
                level + rng.random_range(-0.3..0.3) * cap
            }
            Adversary::Mixture => {
                let level = *self.levels.entry(cell).or_insert_with(|| rng.random::<f64>());
                if rng.random_bool(level) {
                    cap
                } else {
                    0.0
                }
            }
            Adversary::Constant(v) => v,
        };
        value.clamp(0.0, cap)
    }
}

/// Plays one seeded game.
pub fn play(config: &GameConfig, seed: u64) -> Result<GameOutcome> {
    if config.candidates < 2 {
        return Err(Error::domain("the game needs at least two candidates"));
    }
    let mut f = ImprovementFunction::new(config.horizon, config.bins, config.gain_cap, config.coefficient)?;
    let tau = match config.feedback {
        Feedback::Full => 0.0,
        Feedback::Bandit => config.tau()?,
    };
    let bandit = match config.feedback {
        Feedback::Full => None,
        Feedback::Bandit => Some(BanditContext::new(tau, config.candidates, config.horizon)?),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adversary = AdversaryState {
        kind: config.adversary,
        gain_cap: config.gain_cap,
        levels: HashMap::new(),
    };
    let mut executed = RegretLedger::for_function(&f);
    let mut complete = RegretLedger::for_function(&f);
    let mut explored_rounds = 0;

    for round in 0..config.rounds {
        let paths: Vec<Vec<usize>> = (0..config.candidates)
            .map(|_| (0..config.horizon).map(|_| rng.random_range(1..=config.bins)).collect())
            .collect();
        let mut targets: HashMap<(usize, usize), f64> = HashMap::new();
        for path in &paths {
            for (s, &bin) in path.iter().enumerate() {
                targets
                    .entry((s, bin))
                    .or_insert_with(|| adversary.realize((s, bin), round, &mut rng));
            }
        }
        let mut scores = Vec::with_capacity(paths.len());
        for path in &paths {
            let mut score = 0.0;
            for (s, &bin) in path.iter().enumerate() {
                let r = f.reference_gain(bin);
                let prediction = f.query(s, r)?;
                complete.push(
                    s,
                    bin,
                    LedgerEntry {
                        prediction,
                        target: targets[&(s, bin)],
                        reference: r,
                    },
                )?;
                score += prediction;
            }
            scores.push(score);
        }
        let selection = select_by_score(&scores, tau, &mut rng)?;
        explored_rounds += usize::from(selection.explored);
        for (j, path) in paths.iter().enumerate() {
            let weight = match &bandit {
                None => 1.0,
                Some(_) if j != selection.index => continue,
                Some(ctx) => ctx.importance_weight(selection.probability)?,
            };
            for (s, &bin) in path.iter().enumerate() {
                let target = targets[&(s, bin)];
                let update = f.update_weighted(s, f.reference_gain(bin), target, weight)?;
                executed.record(&f, &update, target)?;
            }
        }
    }
    Ok(GameOutcome {
        function: f,
        executed,
        complete,
        tau,
        explored_rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_information_updates_every_observation() {
        let config = GameConfig {
            rounds: 50,
            candidates: 3,
            feedback: Feedback::Full,
            ..GameConfig::default()
        };
        let out = play(&config, 1).unwrap();
        assert_eq!(out.function.total_updates(), 50 * 3 * 2);
        assert_eq!(out.complete.len(), out.executed.len());
        out.executed_regret().unwrap();
    }

    #[test]
    fn bandit_updates_one_candidate_per_round() {
        let config = GameConfig {
            rounds: 64,
            ..GameConfig::default()
        };
        let out = play(&config, 2).unwrap();
        assert_eq!(out.function.total_updates(), 64 * 2);
        assert_eq!(out.complete.len(), 64 * 4 * 2);
        assert!((out.tau - 64f64.powf(-0.25)).abs() < 1e-12);
        assert!(out.explored_rounds > 0);
    }

    #[test]
    fn seeded_games_repeat() {
        let config = GameConfig::default();
        assert_eq!(play(&config, 7).unwrap(), play(&config, 7).unwrap());
    }

    #[test]
    fn adversary_names_round_trip() {
        for a in [
            Adversary::Alternating,
            Adversary::RandomExtreme,
            Adversary::Stochastic,
            Adversary::Mixture,
            Adversary::Constant(0.25),
        ] {
            assert_eq!(a.to_string().parse::<Adversary>().unwrap(), a);
        }
    }
}
