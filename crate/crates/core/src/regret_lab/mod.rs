//! Loss accounting, hindsight optima, regret and bound checks.
//!
//! Ledger entries store the prediction, the clamped realized gain and the
//! bin centre. The revealed discrepancy is `r_ref − r*`, the played offset is
//! `r_ref − f`, and the loss is their absolute difference `|f − r*|`.
//! Regret is cumulative loss minus the loss of the best fixed offset, which
//! an adaptive learner can undercut, so per-cell regret may be negative.

pub mod bounds;
pub mod game;
pub mod ledger;
pub mod perception;

pub use bounds::{
    bandit_bound, check_bandit_bound, check_full_info_bound, ftrl_sum_bound, full_info_bound, BanditBoundReport,
    BoundCheck, FullInfoReport,
};
pub use game::{play, Adversary, Feedback, GameConfig, GameOutcome};
pub use ledger::{
    best_fixed_delta, cell_regret, estimation_regret, CellRegret, LedgerEntry, RegretLedger, RegretSummary,
};
pub use perception::{perception_regret, PerceptionRegretReport, RoundTrace};
