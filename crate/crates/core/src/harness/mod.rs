//! Reproducible episodes, sweeps and mode comparisons.

pub mod compare;
pub mod config;
pub mod episode;
pub mod sweep;

pub use compare::{compare_modes, verify_bounds, ComparisonReport, ModeSummary, NamedCheck, VerificationReport};
pub use config::{parse_seeds, EstimatorMode, ExperimentConfig, WorldSource};
pub use episode::{build_world, run_episode, EpisodeFailure, EpisodeLog, PhaseTimings, StepRecord};
pub use sweep::{sweep, write_sweep, SweepResult, SweepRow, BURN_IN, MIN_FIT_HORIZONS, SWEEP_COLUMNS};
