use super::ledger::RegretSummary;
use crate::stats::{mean, std_error};

/// A measured quantity against its upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn margin(&self) -> f64 {
        self.bound - self.value
    }

    pub fn passed(&self) -> bool {
        self.value <= self.bound + 1e-9
    }
}

/// Per-cell full-information bound `β(N√α* + 1)`.
pub fn full_info_bound(gain_cap: f64, candidates: usize, count: usize) -> f64 {
    gain_cap * (candidates as f64 * (count as f64).sqrt() + 1.0)
}

/// Per-cell bound `Σ_a Nη_a/2 + β²/η_1` with `η_a = β/√a`.
pub fn ftrl_sum_bound(gain_cap: f64, candidates: usize, count: usize) -> f64 {
    let rates: f64 = (1..=count).map(|a| gain_cap / (a as f64).sqrt()).sum();
    candidates as f64 * rates / 2.0 + gain_cap
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullInfoReport {
    /// `(position, bin, check)` for every occupied cell.
    pub cells: Vec<(usize, usize, BoundCheck)>,
    /// The same cells against the learning-rate sum bound.
    pub rate_sum: Vec<(usize, usize, BoundCheck)>,
}

impl FullInfoReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().chain(&self.rate_sum).all(|(_, _, c)| c.passed())
    }

    pub fn worst_margin(&self) -> f64 {
        self.cells
            .iter()
            .map(|(_, _, c)| c.margin())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn violations(&self) -> usize {
        self.cells.iter().filter(|(_, _, c)| !c.passed()).count()
    }
}

/// Checks every cell's regret against `β(N√α* + 1)` and the tighter
/// learning-rate sum it derives from.
pub fn check_full_info_bound(summary: &RegretSummary, gain_cap: f64, candidates: usize) -> FullInfoReport {
    let check = |bound: fn(f64, usize, usize) -> f64| {
        summary
            .cells
            .iter()
            .map(|c| {
                (
                    c.position,
                    c.bin,
                    BoundCheck {
                        value: c.regret,
                        bound: bound(gain_cap, candidates, c.count),
                    },
                )
            })
            .collect()
    };
    FullInfoReport {
        cells: check(full_info_bound),
        rate_sum: check(ftrl_sum_bound),
    }
}

/// Expected per-cell regret bound under bandit feedback,
/// `Kβ(N√T + 1)/τ + τβT`, where `K` is the candidate factor.
pub fn bandit_bound(gain_cap: f64, factor: f64, candidates: usize, episode_len: usize, tau: f64) -> f64 {
    let t = episode_len as f64;
    factor * gain_cap * (candidates as f64 * t.sqrt() + 1.0) / tau + tau * gain_cap * t
}

/// Seed-averaged overall regret against both forms of the bandit bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditBoundReport {
    pub mean: f64,
    pub std_error: f64,
    /// Table size `Δt · b`; the overall bound is this many per-cell bounds.
    pub cells: usize,
    /// Bound with candidate factor `N`.
    pub bound_n: f64,
    /// Bound with candidate factor `N^Δt`.
    pub bound_n_horizon: f64,
}

impl BanditBoundReport {
    /// `mean + 2·SE`, the value compared against the bounds.
    pub fn upper(&self) -> f64 {
        self.mean + 2.0 * self.std_error
    }

    pub fn margin_n(&self) -> f64 {
        self.bound_n - self.upper()
    }

    pub fn margin_n_horizon(&self) -> f64 {
        self.bound_n_horizon - self.upper()
    }

    /// Passes when the tighter `N` form holds, which implies the other.
    pub fn passed(&self) -> bool {
        self.margin_n() >= 0.0
    }
}

/// Compares seed samples of overall regret with both bandit bound forms.
pub fn check_bandit_bound(
    samples: &[f64],
    gain_cap: f64,
    candidates: usize,
    horizon: usize,
    bins: usize,
    episode_len: usize,
    tau: f64,
) -> BanditBoundReport {
    let cells = horizon * bins;
    let n = candidates as f64;
    let per_cell = |factor: f64| bandit_bound(gain_cap, factor, candidates, episode_len, tau);
    BanditBoundReport {
        mean: mean(samples),
        std_error: std_error(samples),
        cells,
        bound_n: cells as f64 * per_cell(n),
        bound_n_horizon: cells as f64 * per_cell(n.powi(horizon as i32)),
    }
}
