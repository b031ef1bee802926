use super::ledger::RegretSummary;
use crate::error::{Error, Result};

/// Per-burst comparison of the executed path with the hindsight-best one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrace {
    /// Realized gain of the executed path, noiseless, against the truth at
    /// the start of the burst.
    pub chosen_realized: f64,
    /// Largest realized gain any feasible path could have collected.
    pub best_realized: f64,
    /// Planner score of the executed path.
    pub chosen_score: f64,
    /// Largest planner score over all feasible paths.
    pub best_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionRegretReport {
    /// `ϱ = Σ [r*(X̂) − r*(X)]`.
    pub varrho: f64,
    pub chosen_realized: Vec<f64>,
    pub best_realized: Vec<f64>,
    /// Executed score over best achievable score, in `[0, 1]`.
    pub gamma: f64,
    /// `(1 − γ)·Σ r*(X̂)`.
    pub delta: f64,
    pub rho: f64,
    pub rho_prime: f64,
    /// `4(ρ + ρ') + Δ`.
    pub bound: f64,
    pub lambda: f64,
    /// `Δt · b · T · λ`, an upper bound on `ρ'` reported for reference.
    pub lambda_bound: f64,
}

impl PerceptionRegretReport {
    pub fn holds(&self) -> bool {
        self.varrho <= self.bound + 1e-9
    }
}

/// Builds the report from a burst trace and the episode's estimation regret.
pub fn perception_regret(
    trace: &[RoundTrace],
    regret: &RegretSummary,
    horizon: usize,
    bins: usize,
    steps: usize,
) -> Result<PerceptionRegretReport> {
    if trace.iter().any(|t| t.best_score + 1e-9 < t.chosen_score) {
        return Err(Error::Consistency(
            "executed path outscored the exhaustive optimum".into(),
        ));
    }
    let chosen_realized: Vec<f64> = trace.iter().map(|t| t.chosen_realized).collect();
    let best_realized: Vec<f64> = trace.iter().map(|t| t.best_realized).collect();
    let best_total: f64 = best_realized.iter().sum();
    let varrho = best_total - chosen_realized.iter().sum::<f64>();
    let chosen_score: f64 = trace.iter().map(|t| t.chosen_score).sum();
    let best_score: f64 = trace.iter().map(|t| t.best_score).sum();
    let gamma = if best_score > 0.0 {
        (chosen_score / best_score).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let delta = (1.0 - gamma) * best_total.max(0.0);
    let bound = 4.0 * (regret.rho + regret.rho_prime) + delta;
    Ok(PerceptionRegretReport {
        varrho,
        chosen_realized,
        best_realized,
        gamma,
        delta,
        rho: regret.rho,
        rho_prime: regret.rho_prime,
        bound,
        lambda: regret.lambda,
        lambda_bound: (horizon * bins * steps) as f64 * regret.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(rho: f64, rho_prime: f64) -> RegretSummary {
        RegretSummary {
            cells: vec![],
            rho,
            rho_prime,
            lambda: 0.1,
        }
    }

    #[test]
    fn optimal_planner_has_zero_regret() {
        let trace = vec![
            RoundTrace {
                chosen_realized: 0.4,
                best_realized: 0.4,
                chosen_score: 0.5,
                best_score: 0.5,
            };
            3
        ];
        let r = perception_regret(&trace, &summary(0.0, 0.0), 2, 10, 6).unwrap();
        assert_eq!(r.varrho, 0.0);
        assert_eq!(r.gamma, 1.0);
        assert_eq!(r.delta, 0.0);
        assert!(r.holds());
        assert!((r.lambda_bound - 12.0).abs() < 1e-12);
    }

    #[test]
    fn approximation_gap_enters_bound() {
        let trace = [RoundTrace {
            chosen_realized: 0.1,
            best_realized: 0.6,
            chosen_score: 0.3,
            best_score: 0.6,
        }];
        let r = perception_regret(&trace, &summary(0.05, 0.0), 1, 1, 1).unwrap();
        assert!((r.varrho - 0.5).abs() < 1e-12);
        assert!((r.gamma - 0.5).abs() < 1e-12);
        assert!((r.delta - 0.3).abs() < 1e-12);
        assert!((r.bound - 0.5).abs() < 1e-12);
        assert!(r.holds());
    }

    #[test]
    fn impossible_trace_is_rejected() {
        let trace = [RoundTrace {
            chosen_realized: 0.0,
            best_realized: 0.0,
            chosen_score: 0.9,
            best_score: 0.5,
        }];
        assert!(perception_regret(&trace, &summary(0.0, 0.0), 1, 1, 1).is_err());
    }
}
