use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::{EstimatorMode, ExperimentConfig};
use super::episode::{run_episode, EpisodeLog};
use super::sweep::BURN_IN;
use crate::error::{Error, Result};
use crate::regret_lab::{check_bandit_bound, check_full_info_bound, BanditBoundReport, Feedback};
use crate::stats::{mean, paired_t_test, std_error, PairedTest};

const MODES: [EstimatorMode; 3] = [EstimatorMode::Corrected, EstimatorMode::Raw, EstimatorMode::Random];

/// Per-seed outcomes of one estimator mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    pub mode: EstimatorMode,
    /// Post-burn-in mean `|estimate − r*|`, one entry per seed.
    pub errors: Vec<f64>,
    /// Cumulative realized gain, one entry per seed.
    pub gains: Vec<f64>,
    /// Perception regret per seed when the world is enumerable.
    pub varrho: Option<Vec<f64>>,
}

impl ModeSummary {
    fn from_logs(mode: EstimatorMode, logs: &[EpisodeLog]) -> Result<Self> {
        let varrho = logs
            .iter()
            .map(|l| match l.perception() {
                Ok(p) => Ok(Some(p.varrho)),
                Err(Error::Refused(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Option<Vec<f64>>>>()?;
        Ok(Self {
            mode,
            errors: logs.iter().map(|l| l.mean_corrected_error(BURN_IN)).collect(),
            gains: logs.iter().map(EpisodeLog::cumulative_gain).collect(),
            varrho,
        })
    }
}

/// Paired comparison of the corrected, raw and random planners on the same
/// worlds and seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub seeds: Vec<u64>,
    /// Corrected, raw, random.
    pub modes: Vec<ModeSummary>,
}

impl ComparisonReport {
    pub fn mode(&self, mode: EstimatorMode) -> &ModeSummary {
        self.modes.iter().find(|m| m.mode == mode).expect("all modes are run")
    }

    /// `1 − err(corrected) / err(raw)` on seed means.
    pub fn error_reduction(&self) -> f64 {
        1.0 - mean(&self.mode(EstimatorMode::Corrected).errors) / mean(&self.mode(EstimatorMode::Raw).errors)
    }

    /// One-sided test that `a` gathers more realized gain than `b`.
    pub fn gain_test(&self, a: EstimatorMode, b: EstimatorMode) -> PairedTest {
        paired_t_test(&self.mode(a).gains, &self.mode(b).gains)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        writeln!(out, "seeds: {}", self.seeds.len()).unwrap();
        writeln!(
            out,
            "{:<10} {:>22} {:>22} {:>22}",
            "mode", "error (mean ± se)", "gain (mean ± se)", "varrho (mean ± se)"
        )
        .unwrap();
        for m in &self.modes {
            let pair = |xs: &[f64]| format!("{:.5} ± {:.5}", mean(xs), std_error(xs));
            let varrho = m.varrho.as_deref().map_or("n/a".to_string(), pair);
            writeln!(
                out,
                "{:<10} {:>22} {:>22} {:>22}",
                m.mode.to_string(),
                pair(&m.errors),
                pair(&m.gains),
                varrho
            )
            .unwrap();
        }
        writeln!(
            out,
            "error reduction, corrected vs raw: {:.1}%",
            100.0 * self.error_reduction()
        )
        .unwrap();
        for (a, b) in [
            (EstimatorMode::Corrected, EstimatorMode::Raw),
            (EstimatorMode::Corrected, EstimatorMode::Random),
            (EstimatorMode::Raw, EstimatorMode::Random),
        ] {
            let t = self.gain_test(a, b);
            writeln!(
                out,
                "gain {a} − {b}: {:+.4} ± {:.4}, one-sided p = {:.4}",
                t.mean_difference, t.std_error, t.p_value
            )
            .unwrap();
        }
        out
    }
}

fn run_all(config: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<EpisodeLog>> {
    seeds
        .par_iter()
        .map(|&s| run_episode(config, s).map_err(|e| e.error))
        .collect()
}

/// Runs every mode on every seed.
pub fn compare_modes(config: &ExperimentConfig, seeds: &[u64]) -> Result<ComparisonReport> {
    config.validate()?;
    let modes = MODES
        .iter()
        .map(|&mode| {
            let cfg = ExperimentConfig {
                estimator: mode,
                ..config.clone()
            };
            ModeSummary::from_logs(mode, &run_all(&cfg, seeds)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        seeds: seeds.to_vec(),
        modes,
    })
}

/// A named pass/fail check with the compared quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    /// Reported but not gating.
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<NamedCheck>,
    pub bandit: Option<BanditBoundReport>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| !c.informational).all(|c| c.passed)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = match (c.informational, c.passed) {
                (true, _) => "INFO",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            writeln!(
                out,
                "{verdict}  {:<44} value {:>14.6}  bound {:>14.6}",
                c.name, c.value, c.bound
            )
            .unwrap();
        }
        writeln!(
            out,
            "{}",
            if self.passed() {
                "all bound checks passed"
            } else {
                "bound check failed"
            }
        )
        .unwrap();
        out
    }
}

/// Runs the configured seeds and checks every bound that applies: the
/// per-cell full-information bound, both bandit forms on seed means, and
/// the perception inequality on enumerable worlds.
pub fn verify_bounds(config: &ExperimentConfig) -> Result<VerificationReport> {
    config.validate()?;
    if config.seeds.is_empty() {
        return Err(Error::domain("verify-bounds needs at least one seed"));
    }
    let cfg = ExperimentConfig {
        estimator: EstimatorMode::Corrected,
        ..config.clone()
    };
    let logs = run_all(&cfg, &cfg.seeds)?;
    let summaries = logs.iter().map(EpisodeLog::regret).collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    let mut bandit = None;
    match cfg.feedback {
        Feedback::Full => {
            let reports: Vec<_> = summaries
                .iter()
                .map(|s| check_full_info_bound(s, cfg.gain_cap, cfg.candidates))
                .collect();
            let worst = reports
                .iter()
                .flat_map(|r| &r.cells)
                .map(|(_, _, c)| *c)
                .min_by(|a, b| a.margin().total_cmp(&b.margin()));
            if let Some(w) = worst {
                checks.push(NamedCheck {
                    name: "full-information per-cell bound (worst cell)".into(),
                    value: w.value,
                    bound: w.bound,
                    passed: reports.iter().all(|r| r.passed()),
                    informational: false,
                });
            }
        }
        Feedback::Bandit => {
            let rhos: Vec<f64> = summaries.iter().map(|s| s.rho).collect();
            let tau = logs[0].tau;
            let r = check_bandit_bound(
                &rhos,
                cfg.gain_cap,
                cfg.candidates,
                cfg.horizon,
                cfg.bins,
                cfg.steps,
                tau,
            );
            checks.push(NamedCheck {
                name: "bandit bound, N form (mean + 2se)".into(),
                value: r.upper(),
                bound: r.bound_n,
                passed: r.margin_n() >= 0.0,
                informational: false,
            });
            checks.push(NamedCheck {
                name: "bandit bound, N^dt form (mean + 2se)".into(),
                value: r.upper(),
                bound: r.bound_n_horizon,
                passed: r.margin_n_horizon() >= 0.0,
                informational: true,
            });
            bandit = Some(r);
        }
    }
    let perception = logs
        .iter()
        .map(|l| match l.perception() {
            Ok(p) => Ok(Some(p)),
            Err(Error::Refused(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Option<Vec<_>>>>()?;
    if let Some(reports) = perception {
        let varrho: Vec<f64> = reports.iter().map(|p| p.varrho).collect();
        let bound: Vec<f64> = reports.iter().map(|p| p.bound).collect();
        checks.push(NamedCheck {
            name: "perception regret, every run".into(),
            value: reports
                .iter()
                .map(|p| p.varrho - p.bound)
                .fold(f64::NEG_INFINITY, f64::max),
            bound: 0.0,
            passed: reports.iter().all(|p| p.holds()),
            informational: false,
        });
        checks.push(NamedCheck {
            name: "perception regret, seed mean".into(),
            value: mean(&varrho),
            bound: mean(&bound),
            passed: mean(&varrho) <= mean(&bound) + 1e-9,
            informational: false,
        });
        let lambda_bound: Vec<f64> = reports.iter().map(|p| p.lambda_bound).collect();
        let rho_prime: Vec<f64> = reports.iter().map(|p| p.rho_prime).collect();
        checks.push(NamedCheck {
            name: "rho' against dt*b*T*lambda".into(),
            value: mean(&rho_prime),
            bound: mean(&lambda_bound),
            passed: mean(&rho_prime) <= mean(&lambda_bound) + 1e-9,
            informational: true,
        });
    }
    Ok(VerificationReport { checks, bandit })
}
