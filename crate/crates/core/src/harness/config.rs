use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::DEFAULT_UPDATE_COEFFICIENT;
use crate::gridworld::{NoiseModel, Scenario, SensorConfig, DEFAULT_L_HIT, DEFAULT_L_MISS};
use crate::regret_lab::Feedback;

/// Where the ground-truth world comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    Scenario(Scenario),
    File(PathBuf),
}

impl fmt::Display for WorldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorldSource::Scenario(s) => write!(f, "{s}"),
            WorldSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for WorldSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().strip_prefix("file:") {
            Some(path) => Ok(WorldSource::File(PathBuf::from(path))),
            None => Ok(WorldSource::Scenario(s.parse()?)),
        }
    }
}

/// How the planner turns expected gain into a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    /// Learned improvement function.
    Corrected,
    /// Expected gain as is; the table stays the identity.
    Raw,
    /// Uniform choice among candidates.
    Random,
}

impl fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorMode::Corrected => "corrected",
            EstimatorMode::Raw => "raw",
            EstimatorMode::Random => "random",
        })
    }
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "corrected" => Ok(EstimatorMode::Corrected),
            "raw" => Ok(EstimatorMode::Raw),
            "random" => Ok(EstimatorMode::Random),
            other => Err(Error::domain(format!("unknown estimator mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub world: WorldSource,
    /// Number of executed observations T.
    pub steps: usize,
    pub horizon: usize,
    pub bins: usize,
    pub gain_cap: f64,
    pub coefficient: f64,
    pub candidates: usize,
    /// Fixed τ; `None` uses `T^{-1/4}`.
    pub tau: Option<f64>,
    pub noise: NoiseModel,
    pub feedback: Feedback,
    pub estimator: EstimatorMode,
    /// Whether exploratory draws are actually driven. When off, the robot
    /// always executes the best-scored path and learns with unit weight.
    pub execute_exploration: bool,
    pub ray_count: usize,
    pub max_range: f64,
    pub l_hit: f64,
    pub l_miss: f64,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            world: WorldSource::Scenario(Scenario::Mixed),
            steps: 1024,
            horizon: 3,
            bins: 20,
            gain_cap: 1.0,
            coefficient: DEFAULT_UPDATE_COEFFICIENT,
            candidates: 8,
            tau: None,
            noise: NoiseModel::Impulse,
            feedback: Feedback::Bandit,
            estimator: EstimatorMode::Corrected,
            execute_exploration: true,
            ray_count: 64,
            max_range: 6.0,
            l_hit: DEFAULT_L_HIT,
            l_miss: DEFAULT_L_MISS,
            seeds: (0..20).collect(),
            output: PathBuf::from("out"),
        }
    }
}

const KEYS: &[&str] = &[
    "world",
    "steps",
    "horizon",
    "bins",
    "gain_cap",
    "coefficient",
    "candidates",
    "tau",
    "noise",
    "feedback",
    "estimator",
    "execute_exploration",
    "ray_count",
    "max_range",
    "l_hit",
    "l_miss",
    "seeds",
    "output",
];

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive, got {v}")))
            }
        };
        if self.horizon == 0 || self.bins == 0 {
            return Err(Error::domain("horizon and bins must be at least 1"));
        }
        if self.candidates < 2 {
            return Err(Error::domain("candidates must be at least 2"));
        }
        positive("gain_cap", self.gain_cap)?;
        positive("coefficient", self.coefficient)?;
        positive("max_range", self.max_range)?;
        if let Some(t) = self.tau {
            if !(t > 0.0 && t < 0.5) {
                return Err(Error::domain(format!("tau must lie in (0, 0.5), got {t}")));
            }
        }
        self.sensor().validate()
    }

    pub fn sensor(&self) -> SensorConfig {
        SensorConfig {
            ray_count: self.ray_count,
            max_range: self.max_range,
            l_hit: self.l_hit,
            l_miss: self.l_miss,
            noise: self.noise,
        }
    }

    /// Set one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::domain(format!("bad value {v:?} for {key}")))
        }
        match key {
            "world" => self.world = value.parse()?,
            "steps" => self.steps = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "bins" => self.bins = num(key, value)?,
            "gain_cap" => self.gain_cap = num(key, value)?,
            "coefficient" => self.coefficient = num(key, value)?,
            "candidates" => self.candidates = num(key, value)?,
            "tau" => {
                self.tau = match value {
                    "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            "noise" => self.noise = value.parse()?,
            "feedback" => self.feedback = value.parse()?,
            "estimator" => self.estimator = value.parse()?,
            "execute_exploration" => self.execute_exploration = num(key, value)?,
            "ray_count" => self.ray_count = num(key, value)?,
            "max_range" => self.max_range = num(key, value)?,
            "l_hit" => self.l_hit = num(key, value)?,
            "l_miss" => self.l_miss = num(key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "output" => self.output = PathBuf::from(value),
            other => return Err(Error::domain(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "world" => self.world.to_string(),
            "steps" => self.steps.to_string(),
            "horizon" => self.horizon.to_string(),
            "bins" => self.bins.to_string(),
            "gain_cap" => self.gain_cap.to_string(),
            "coefficient" => self.coefficient.to_string(),
            "candidates" => self.candidates.to_string(),
            "tau" => self.tau.map_or("auto".into(), |t| t.to_string()),
            "noise" => self.noise.to_string(),
            "feedback" => self.feedback.to_string(),
            "estimator" => self.estimator.to_string(),
            "execute_exploration" => self.execute_exploration.to_string(),
            "ray_count" => self.ray_count.to_string(),
            "max_range" => self.max_range.to_string(),
            "l_hit" => self.l_hit.to_string(),
            "l_miss" => self.l_miss.to_string(),
            "seeds" => self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
            "output" => self.output.display().to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// `key = value` lines for every field.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            writeln!(out, "{key} = {}", self.get(key)).unwrap();
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    /// Starts from the defaults and applies each `key = value` line; `#`
    /// begins a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Comma-separated seeds; `a..b` expands to the half-open range.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::domain(format!("bad seed {part:?}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                seeds.extend(a..b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let config = ExperimentConfig {
            world: WorldSource::File(PathBuf::from("worlds/a b.txt")),
            tau: Some(0.125),
            coefficient: 2.0,
            seeds: vec![3, 1, 4],
            execute_exploration: false,
            l_miss: -0.35,
            ..ExperimentConfig::default()
        };
        let back: ExperimentConfig = config.to_text().parse().unwrap();
        assert_eq!(back, config);
        let default: ExperimentConfig = ExperimentConfig::default().to_text().parse().unwrap();
        assert_eq!(default, ExperimentConfig::default());
    }

    #[test]
    fn comments_and_ranges() {
        let c: ExperimentConfig = "# header\nsteps = 10 # short\nseeds = 0..3, 9\nworld = tiny\n"
            .parse()
            .unwrap();
        assert_eq!(c.steps, 10);
        assert_eq!(c.seeds, vec![0, 1, 2, 9]);
        assert_eq!(c.world, WorldSource::Scenario(Scenario::Tiny));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(matches!("tau = 0.7".parse::<ExperimentConfig>(), Err(Error::Domain(_))));
        assert!(matches!(
            "steps: 3".parse::<ExperimentConfig>(),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            "colour = red".parse::<ExperimentConfig>(),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!("candidates = 1".parse::<ExperimentConfig>().is_err());
    }
}
