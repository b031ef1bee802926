use crate::error::{Error, Result};
use crate::estimator::{CellUpdate, ImprovementFunction};

/// L1-optimal fixed offset for a discrepancy sequence: the lower median and
/// its total loss.
pub fn best_fixed_delta(discrepancies: &[f64]) -> Result<(f64, f64)> {
    if discrepancies.is_empty() {
        return Err(Error::domain("best fixed offset of an empty sequence"));
    }
    let mut sorted = discrepancies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let delta = sorted[(sorted.len() - 1) / 2];
    let loss = discrepancies.iter().map(|d| (d - delta).abs()).sum();
    Ok((delta, loss))
}

/// One observation routed to a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    /// Estimate the cell reported before the update.
    pub prediction: f64,
    /// Realized gain, clamped into `[0, β]`.
    pub target: f64,
    /// Bin centre the cell's offsets are measured from.
    pub reference: f64,
}

impl LedgerEntry {
    /// Discrepancy `r_ref − r*` the adversary revealed.
    pub fn discrepancy(&self) -> f64 {
        self.reference - self.target
    }

    /// Offset `δ = r_ref − f` the learner played.
    pub fn offset(&self) -> f64 {
        self.reference - self.prediction
    }

    pub fn loss(&self) -> f64 {
        (self.discrepancy() - self.offset()).abs()
    }
}

/// Per-cell loss history of one improvement function.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    horizon: usize,
    bins: usize,
    cells: Vec<Vec<LedgerEntry>>,
}

impl RegretLedger {
    pub fn new(horizon: usize, bins: usize) -> Self {
        Self {
            horizon,
            bins,
            cells: vec![Vec::new(); horizon * bins],
        }
    }

    pub fn for_function(f: &ImprovementFunction) -> Self {
        Self::new(f.horizon(), f.bins())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    fn slot(&self, position: usize, bin: usize) -> Result<usize> {
        if position >= self.horizon || bin == 0 || bin > self.bins {
            return Err(Error::domain(format!("cell ({position}, {bin}) outside the ledger")));
        }
        Ok(position * self.bins + bin - 1)
    }

    pub fn push(&mut self, position: usize, bin: usize, entry: LedgerEntry) -> Result<()> {
        let slot = self.slot(position, bin)?;
        self.cells[slot].push(entry);
        Ok(())
    }

    /// Records the outcome of an improvement-function update.
    pub fn record(&mut self, f: &ImprovementFunction, update: &CellUpdate, target: f64) -> Result<()> {
        let entry = LedgerEntry {
            prediction: update.prediction,
            target: f.clamp_gain(target),
            reference: f.reference_gain(update.bin),
        };
        self.push(update.position, update.bin, entry)
    }

    pub fn entries(&self, position: usize, bin: usize) -> Result<&[LedgerEntry]> {
        Ok(&self.cells[self.slot(position, bin)?])
    }

    pub fn len(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every `(position, bin)` with at least one entry, in row-major order.
    pub fn occupied_cells(&self) -> impl Iterator<Item = (usize, usize, &[LedgerEntry])> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_empty())
            .map(move |(i, e)| (i / self.bins, i % self.bins + 1, e.as_slice()))
    }

    /// Errors unless every cell holds exactly as many entries as `f` has
    /// applied updates.
    pub fn check_against(&self, f: &ImprovementFunction) -> Result<()> {
        if f.horizon() != self.horizon || f.bins() != self.bins {
            return Err(Error::Consistency(
                "ledger and improvement function differ in shape".into(),
            ));
        }
        for s in 0..self.horizon {
            for k in 1..=self.bins {
                let have = self.entries(s, k)?.len() as u64;
                let want = f.count(s, k)?;
                if have != want {
                    return Err(Error::Consistency(format!(
                        "cell ({s}, {k}) has {have} ledger entries but {want} updates"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRegret {
    pub position: usize,
    pub bin: usize,
    /// α*: observations the cell received.
    pub count: usize,
    pub loss: f64,
    pub best_offset: f64,
    pub best_loss: f64,
    /// Largest `|Δr − δ*|` in the cell.
    pub spread: f64,
    pub regret: f64,
}

/// Regret of every occupied cell and the totals `ρ`, `ρ'` and `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub cells: Vec<CellRegret>,
    pub rho: f64,
    pub rho_prime: f64,
    pub lambda: f64,
}

impl RegretSummary {
    pub fn total_loss(&self) -> f64 {
        self.cells.iter().map(|c| c.loss).sum()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

/// Cumulative loss minus hindsight-optimal loss for a single cell.
pub fn cell_regret(entries: &[LedgerEntry]) -> Result<(f64, f64, f64, f64)> {
    let discrepancies: Vec<f64> = entries.iter().map(LedgerEntry::discrepancy).collect();
    let (delta, best) = best_fixed_delta(&discrepancies)?;
    let loss: f64 = entries.iter().map(LedgerEntry::loss).sum();
    Ok((loss, delta, best, loss - best))
}

/// Per-cell and overall estimation regret. When `f` is given the ledger
/// must agree with its counters.
pub fn estimation_regret(ledger: &RegretLedger, f: Option<&ImprovementFunction>) -> Result<RegretSummary> {
    if let Some(f) = f {
        ledger.check_against(f)?;
    }
    let mut cells = Vec::new();
    for (position, bin, entries) in ledger.occupied_cells() {
        let (loss, best_offset, best_loss, regret) = cell_regret(entries)?;
        let spread = entries
            .iter()
            .map(|e| (e.discrepancy() - best_offset).abs())
            .fold(0.0, f64::max);
        cells.push(CellRegret {
            position,
            bin,
            count: entries.len(),
            loss,
            best_offset,
            best_loss,
            spread,
            regret,
        });
    }
    Ok(RegretSummary {
        rho: cells.iter().map(|c| c.regret).sum(),
        rho_prime: cells.iter().map(|c| c.best_loss).sum(),
        lambda: cells.iter().map(|c| c.spread).fold(0.0, f64::max),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(discrepancy: f64, offset: f64) -> LedgerEntry {
        LedgerEntry {
            prediction: 0.5 - offset,
            target: 0.5 - discrepancy,
            reference: 0.5,
        }
    }

    #[test]
    fn fixed_delta_examples() {
        assert_eq!(best_fixed_delta(&[0.3, 0.3, 0.3]).unwrap(), (0.3, 0.0));
        assert_eq!(best_fixed_delta(&[1.0, 1.0, 3.0]).unwrap(), (1.0, 2.0));
        assert_eq!(best_fixed_delta(&[0.0, 2.0]).unwrap(), (0.0, 2.0));
        assert!(best_fixed_delta(&[]).is_err());
    }

    #[test]
    fn perfect_estimator_has_zero_regret() {
        let mut ledger = RegretLedger::new(1, 1);
        for _ in 0..5 {
            ledger.push(0, 1, entry(0.2, 0.2)).unwrap();
        }
        let summary = estimation_regret(&ledger, None).unwrap();
        assert!(summary.rho.abs() < 1e-12);
        assert!(summary.rho_prime.abs() < 1e-12);
    }

    #[test]
    fn unit_losses_give_regret_two() {
        let mut ledger = RegretLedger::new(1, 1);
        ledger.push(0, 1, entry(0.0, 1.0)).unwrap();
        ledger.push(0, 1, entry(0.0, -1.0)).unwrap();
        let summary = estimation_regret(&ledger, None).unwrap();
        assert!((summary.rho - 2.0).abs() < 1e-12);
        assert!((summary.rho + summary.rho_prime - summary.total_loss()).abs() < 1e-12);
    }

    #[test]
    fn ledger_must_match_counters() {
        let mut f = ImprovementFunction::new(2, 4, 1.0, 4.0).unwrap();
        let mut ledger = RegretLedger::for_function(&f);
        let u = f.update(1, 0.3, 0.1).unwrap();
        assert!(ledger.check_against(&f).is_err());
        ledger.record(&f, &u, 0.1).unwrap();
        ledger.check_against(&f).unwrap();
        assert!(matches!(
            estimation_regret(&RegretLedger::new(2, 4), Some(&f)),
            Err(Error::Consistency(_))
        ));
    }
}
