use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::episode::{run_episode, EpisodeLog};
use crate::error::{Error, Result};
use crate::regret_lab::{bandit_bound, full_info_bound};
use crate::stats::{fit_log_log_slope, SlopeFit};

/// Column order of the sweep CSV.
pub const SWEEP_COLUMNS: [&str; 11] = [
    "T",
    "seed",
    "rho",
    "rho_prime",
    "varrho",
    "bound_full",
    "bound_bandit",
    "gamma",
    "lambda",
    "mean_abs_err_corrected",
    "mean_abs_err_baseline",
];

/// Fraction of each episode skipped before estimation errors are averaged.
pub const BURN_IN: f64 = 0.2;

/// Bootstrap resamples behind the slope confidence interval.
pub const SLOPE_RESAMPLES: usize = 2000;

/// Fewest distinct episode lengths a slope is fitted on.
pub const MIN_FIT_HORIZONS: usize = 3;

/// One `(T, seed)` episode of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub steps: usize,
    pub seed: u64,
    pub rho: f64,
    pub rho_prime: f64,
    /// Perception regret; only on worlds small enough to enumerate.
    pub varrho: Option<f64>,
    /// `Σ β(N√α* + 1)` over occupied cells.
    pub bound_full: f64,
    /// `Δt·b` times the per-cell bandit bound, `N` form.
    pub bound_bandit: f64,
    pub gamma: Option<f64>,
    pub lambda: f64,
    /// Error of the estimate the planner used, after burn-in.
    pub mean_abs_err_corrected: f64,
    /// Error of the raw expected gain on the same steps.
    pub mean_abs_err_baseline: f64,
}

impl SweepRow {
    pub fn from_log(config: &ExperimentConfig, log: &EpisodeLog) -> Result<Self> {
        let regret = log.regret()?;
        let perception = match log.perception() {
            Ok(p) => Some(p),
            Err(Error::Refused(_)) => None,
            Err(e) => return Err(e),
        };
        let bound_full = regret
            .cells
            .iter()
            .map(|c| full_info_bound(config.gain_cap, config.candidates, c.count))
            .sum();
        let per_cell = bandit_bound(
            config.gain_cap,
            config.candidates as f64,
            config.candidates,
            log.steps(),
            log.tau,
        );
        Ok(Self {
            steps: log.steps(),
            seed: log.seed,
            rho: regret.rho,
            rho_prime: regret.rho_prime,
            varrho: perception.as_ref().map(|p| p.varrho),
            bound_full,
            bound_bandit: (config.horizon * config.bins) as f64 * per_cell,
            gamma: perception.as_ref().map(|p| p.gamma),
            lambda: regret.lambda,
            mean_abs_err_corrected: log.mean_corrected_error(BURN_IN),
            mean_abs_err_baseline: log.mean_raw_error(BURN_IN),
        })
    }

    fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.steps,
            self.seed,
            self.rho,
            self.rho_prime,
            opt(self.varrho),
            self.bound_full,
            self.bound_bandit,
            opt(self.gamma),
            self.lambda,
            self.mean_abs_err_corrected,
            self.mean_abs_err_baseline
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by T, then by the order seeds were given.
    pub rows: Vec<SweepRow>,
    /// Fit of log mean ρ against log T; `None` with fewer than
    /// [`MIN_FIT_HORIZONS`] lengths or a non-positive mean.
    pub fit: Option<SlopeFit>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = SWEEP_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    /// Distinct episode lengths in increasing order.
    pub fn horizons(&self) -> Vec<usize> {
        let mut ts: Vec<usize> = self.rows.iter().map(|r| r.steps).collect();
        ts.dedup();
        ts
    }

    /// Per-seed ρ values grouped by episode length.
    pub fn rho_by_horizon(&self) -> Vec<(usize, Vec<f64>)> {
        self.horizons()
            .into_iter()
            .map(|t| (t, self.rows.iter().filter(|r| r.steps == t).map(|r| r.rho).collect()))
            .collect()
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for (t, rhos) in self.rho_by_horizon() {
            let rows: Vec<&SweepRow> = self.rows.iter().filter(|r| r.steps == t).collect();
            let avg = |f: &dyn Fn(&SweepRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
            writeln!(
                out,
                "T={t:>6}  seeds={:>3}  rho={:>10.4}  rho'={:>10.4}  err corrected={:.5}  err raw={:.5}",
                rhos.len(),
                crate::stats::mean(&rhos),
                avg(&|r| r.rho_prime),
                avg(&|r| r.mean_abs_err_corrected),
                avg(&|r| r.mean_abs_err_baseline),
            )
            .unwrap();
        }
        match &self.fit {
            Some(fit) => writeln!(
                out,
                "log-log slope of rho: {:.3} (95% CI {:.3} to {:.3})",
                fit.slope, fit.ci_lower, fit.ci_upper
            )
            .unwrap(),
            None => writeln!(
                out,
                "slope fit refused: needs {MIN_FIT_HORIZONS} lengths with positive mean rho"
            )
            .unwrap(),
        }
        out
    }
}

/// Runs every `(T, seed)` pair in parallel and fits the regret growth rate.
pub fn sweep(config: &ExperimentConfig, horizons: &[usize], seeds: &[u64]) -> Result<SweepResult> {
    config.validate()?;
    let mut ts = horizons.to_vec();
    ts.sort_unstable();
    ts.dedup();
    let jobs: Vec<(usize, u64)> = ts.iter().flat_map(|&t| seeds.iter().map(move |&s| (t, s))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(steps, seed)| {
            let cfg = ExperimentConfig {
                steps,
                ..config.clone()
            };
            let log = run_episode(&cfg, seed).map_err(|e| e.error)?;
            SweepRow::from_log(&cfg, &log)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult { rows, fit: None };
    let grouped = result.rho_by_horizon();
    if grouped.len() >= MIN_FIT_HORIZONS {
        let xs: Vec<f64> = grouped.iter().map(|(t, _)| *t as f64).collect();
        let ys: Vec<Vec<f64>> = grouped.into_iter().map(|(_, v)| v).collect();
        result.fit = fit_log_log_slope(&xs, &ys, SLOPE_RESAMPLES, seeds.first().copied().unwrap_or(0));
    }
    Ok(result)
}

/// Writes `sweep.csv` and `sweep.txt` into `dir`.
pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join("sweep.csv");
    std::fs::write(&csv, result.to_csv())?;
    std::fs::write(dir.join("sweep.txt"), result.report())?;
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Scenario;
    use crate::harness::WorldSource;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            world: WorldSource::Scenario(Scenario::Tiny),
            horizon: 2,
            bins: 10,
            candidates: 4,
            max_range: 3.0,
            ray_count: 16,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_length_refuses_fit_but_writes_rows() {
        let result = sweep(&tiny(), &[8], &[0, 1]).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert!(result.fit.is_none());
        let csv = result.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("T,seed,rho,"));
    }

    #[test]
    fn rows_are_ordered_and_repeatable() {
        let a = sweep(&tiny(), &[12, 6], &[3, 1]).unwrap();
        let keys: Vec<(usize, u64)> = a.rows.iter().map(|r| (r.steps, r.seed)).collect();
        assert_eq!(keys, vec![(6, 3), (6, 1), (12, 3), (12, 1)]);
        assert_eq!(a, sweep(&tiny(), &[6, 12], &[3, 1]).unwrap());
        assert!(a.rows.iter().all(|r| r.varrho.is_some() && r.gamma.is_some()));
    }
}
